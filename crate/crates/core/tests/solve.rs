use expskel_core::expsum::{ExpSum, ExpTerm};
use expskel_core::genericity::exponent_set_quality;
use expskel_core::geometry::Rect;
use expskel_core::solve::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn unit(exps: &[C]) -> ExpSum {
    ExpSum::planar(&exps.iter().map(|&m| (c(0.0, 0.0), m)).collect::<Vec<_>>()).unwrap()
}

fn one_plus_exp() -> ExpSum {
    unit(&[c(0.0, 0.0), c(1.0, 0.0)])
}

fn cosh2() -> ExpSum {
    unit(&[c(1.0, 0.0), c(-1.0, 0.0)])
}

fn tri() -> ExpSum {
    unit(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)])
}

fn opts() -> SolveOptions {
    SolveOptions::default()
}

/// Winding number of the directly evaluated, dominance-scaled sum along the
/// boundary of `r`, by summing wrapped phase increments on a dense polygon.
fn brute_winding(s: &ExpSum, r: &Rect, per_side: usize) -> i64 {
    let corners = r.corners();
    let f = |z: C| {
        let terms: Vec<C> = s.terms().map(|t| t.alpha + t.exponent.0[0] * z).collect();
        let b = terms.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
        terms.iter().map(|e| (e - b).exp()).sum::<C>()
    };
    let mut total = 0.0;
    let mut prev = f(corners[0]).arg();
    for side in 0..4 {
        let (a, b) = (corners[side], corners[(side + 1) % 4]);
        for k in 1..=per_side {
            let z = a + (b - a) * (k as f64 / per_side as f64);
            let cur = f(z).arg();
            let mut d = cur - prev;
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            total += d;
            prev = cur;
        }
    }
    (total / (2.0 * PI)).round() as i64
}

fn sorted_points(rs: &RootSet) -> Vec<C> {
    let mut p = rs.planar_points();
    p.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    p
}

#[test]
fn zeros_of_one_plus_exp() {
    let rs = find_planar_roots(&one_plus_exp(), &Rect::new(-1.0, -7.0, 1.0, 7.0), RootMode::Zeros, opts()).unwrap();
    let p = sorted_points(&rs);
    assert_eq!(p.len(), 2);
    assert!((p[0] - c(0.0, -PI)).norm() < 1e-10);
    assert!((p[1] - c(0.0, PI)).norm() < 1e-10);
    assert!(rs.points.iter().all(|r| r.multiplicity == 1 && r.residual < NEWTON_TOL));
    assert_eq!(rs.certified_count, Some(2));
}

#[test]
fn critical_points_of_cosh() {
    let rs = find_planar_roots(&cosh2(), &Rect::centered(4.0), RootMode::Critical, opts()).unwrap();
    let p = sorted_points(&rs);
    assert_eq!(p.len(), 3);
    for (got, want) in p.iter().zip([c(0.0, -PI), c(0.0, 0.0), c(0.0, PI)]) {
        assert!((got - want).norm() < 1e-10);
    }
}

#[test]
fn three_term_zeros_match_winding() {
    let w = Rect::centered(8.0);
    let rs = find_planar_roots(&tri(), &w, RootMode::Zeros, opts()).unwrap();
    let oracle = brute_winding(&tri(), &w, 20000);
    assert_eq!(rs.total() as i64, oracle);
    assert_eq!(count_winding(&tri(), WindingTarget::Value, &Contour::Box(w), 256).unwrap(), oracle);
    assert!(oracle > 0);
}

#[test]
fn critical_zeros_need_a_double_root() {
    // (1 + e^z)^2 = 1 + 2e^z + e^{2z} has double zeros at iπ(2j+1).
    let s = ExpSum::planar(&[(c(0.0, 0.0), c(0.0, 0.0)), (c(2f64.ln(), 0.0), c(1.0, 0.0)), (c(0.0, 0.0), c(2.0, 0.0))])
        .unwrap();
    let w = Rect::new(-1.0, -4.0, 1.0, 4.0);
    let rs = find_planar_roots(&s, &w, RootMode::CriticalZeros, opts()).unwrap();
    let p = sorted_points(&rs);
    assert_eq!(p.len(), 2);
    assert!((p[1] - c(0.0, PI)).norm() < 1e-6);
    let zs = find_planar_roots(&s, &w, RootMode::Zeros, opts()).unwrap();
    assert_eq!(zs.total(), 4);
    assert!(zs.points.iter().all(|r| r.multiplicity == 2));
    assert!(find_planar_roots(&tri(), &Rect::centered(6.0), RootMode::CriticalZeros, opts()).unwrap().points.is_empty());
}

#[test]
fn winding_examples() {
    let unit_circle = Contour::Circle { center: c(0.0, 0.0), radius: 1.0 };
    assert_eq!(count_winding(&cosh2(), WindingTarget::Derivative, &unit_circle, 128).unwrap(), 1);
    let big = Contour::Circle { center: c(0.0, 0.0), radius: 4.0 };
    assert_eq!(count_winding(&cosh2(), WindingTarget::Derivative, &big, 128).unwrap(), 3);
    let around = Contour::Circle { center: c(0.0, PI), radius: 1.0 };
    assert_eq!(count_winding(&one_plus_exp(), WindingTarget::Value, &around, 128).unwrap(), 1);
    let through = Contour::Circle { center: c(1.0, PI), radius: 1.0 };
    assert!(matches!(
        count_winding(&one_plus_exp(), WindingTarget::Value, &through, 128),
        Err(SolveError::RootOnContour { .. })
    ));
    let constant = unit(&[c(0.0, 0.0)]);
    assert!(matches!(
        count_winding(&constant, WindingTarget::Derivative, &unit_circle, 64),
        Err(SolveError::ConstantFunction)
    ));
}

#[test]
fn boundary_roots_are_flagged() {
    let rs = find_planar_roots(&one_plus_exp(), &Rect::new(-1.0, -1.0, 1.0, PI), RootMode::Zeros, opts()).unwrap();
    assert_eq!(rs.points.len(), 1);
    assert!(rs.points[0].near_boundary);
}

#[test]
fn bound_examples() {
    let r = verify_bounds(&one_plus_exp(), &Rect::new(-1.0, -7.0, 1.0, 7.0), BoundKind::ZeroContainment, 0.1, None, 64)
        .unwrap();
    assert!(r.passed);
    assert_eq!(r.checked, 2);
    // Both zeros sit on the bisector, where the gap is zero.
    assert!((r.min_margin - 0.1).abs() < 1e-9);

    let w = Rect::centered(8.0);
    let r = verify_bounds(&tri(), &w, BoundKind::ZeroContainment, 2f64.ln() + 0.01, None, 64).unwrap();
    assert!(r.passed && r.violations.is_empty());
    assert!(r.checked > 0);

    let r = verify_bounds(&tri(), &w, BoundKind::C1Lower, 0.0, Some(2.0), 400).unwrap();
    assert!(r.passed);
    assert!(r.min_margin > 0.0);

    assert!(matches!(
        verify_bounds(&tri(), &w, BoundKind::ZeroContainment, 0.5, None, 64),
        Err(SolveError::ConstantTooSmall { .. })
    ));
}

#[test]
fn critical_points_in_dimension_two() {
    // cosh(z1) + cosh(z2): critical where sinh z1 = sinh z2 = 0.
    let mut terms = Vec::new();
    for m in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
        terms.push(ExpTerm::new(c(0.0, 0.0), vec![c(m[0], 0.0), c(m[1], 0.0)]));
    }
    let s = ExpSum::new(2, terms).unwrap();
    let w = [Rect::new(-1.0, -1.0, 1.0, 4.0), Rect::new(-1.0, -1.0, 1.0, 1.0)];
    let rs = find_roots(&s, &w, RootMode::Critical, SolveOptions { grid_density: 8, seed: 0 }).unwrap();
    let mut found: Vec<(f64, f64)> = rs.points.iter().map(|r| (r.location.0[0].im, r.location.0[1].im)).collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(found.len(), 2);
    assert!(found[0].0.abs() < 1e-8 && found[0].1.abs() < 1e-8);
    assert!((found[1].0 - PI).abs() < 1e-8);
    assert!(matches!(find_roots(&s, &w, RootMode::Zeros, opts()), Err(SolveError::NotIsolated(2))));
}

fn strongly_basic_sum() -> impl Strategy<Value = ExpSum> {
    prop::collection::vec((-1.0..1.0f64, -PI..PI, -2.0..2.0f64, -2.0..2.0f64), 3..5).prop_filter_map(
        "strongly basic",
        |v| {
            let t: Vec<(C, C)> = v.iter().map(|&(ar, ai, mr, mi)| (c(ar, ai), c(mr, mi))).collect();
            let s = ExpSum::planar(&t).ok()?;
            let q = exponent_set_quality(&s.exponent_points(), 1, None).ok()?;
            (q.delta_set > 0.05).then_some(s)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn winding_matches_root_count(s in strongly_basic_sum(), center in (-3.0..3.0f64, -3.0..3.0f64), radius in 0.5..3.0f64) {
        let center = c(center.0, center.1);
        let w = Rect::new(center.re - radius, center.im - radius, center.re + radius, center.im + radius);
        let rs = find_planar_roots(&s, &w.expand(0.5), RootMode::Zeros, opts()).unwrap();
        let contour = Contour::Circle { center, radius };
        let Ok(wind) = count_winding(&s, WindingTarget::Value, &contour, 256) else {
            // A zero on the circle; nothing to compare.
            return Ok(());
        };
        let inside: u64 = rs.points.iter().filter(|r| (r.location.0[0] - center).norm() < radius).map(|r| r.multiplicity as u64).sum();
        prop_assert_eq!(wind, inside as i64);
        for r in &rs.points {
            prop_assert!(r.residual < NEWTON_TOL);
        }
    }

    #[test]
    fn zeros_lie_near_the_skeleton(s in strongly_basic_sum()) {
        let l = (s.len() - 1) as f64;
        let r = verify_bounds(&s, &Rect::centered(5.0), BoundKind::ZeroContainment, l.ln() + 0.01, None, 64).unwrap();
        prop_assert!(r.passed, "{:?}", r.violations);
    }

    #[test]
    fn critical_counts_on_unit_disks_obey_jensen(s in strongly_basic_sum(), centers in prop::collection::vec((-4.0..4.0f64, -4.0..4.0f64), 100)) {
        let d = s.derivative(0).unwrap();
        let mut worst = 0;
        for (x, y) in centers {
            let a = c(x, y);
            let Ok(n) = count_winding(&s, WindingTarget::Derivative, &Contour::Circle { center: a, radius: 1.0 }, 256) else {
                continue;
            };
            // Jensen: zeros in the unit disk <= ln(max_{|z-a|=e} |f| / |f(a)|).
            let log_f = |z: C| d.planar_jet(z).log_scale + d.planar_jet(z).value.norm().ln();
            let log_max = (0..2048)
                .map(|k| log_f(a + C::from_polar(std::f64::consts::E, 2.0 * PI * k as f64 / 2048.0)))
                .fold(f64::NEG_INFINITY, f64::max);
            let bound = log_max - log_f(a);
            prop_assert!(n as f64 <= bound + 1e-6, "{n} zeros, Jensen bound {bound}");
            worst = worst.max(n);
        }
        // The recorded N_{B_1} is finite and small.
        prop_assert!(worst < 20);
    }
}
