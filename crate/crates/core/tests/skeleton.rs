use approx::assert_relative_eq;
use expskel_core::expsum::{ComplexVec, ExpSum};
use expskel_core::genericity::exponent_set_quality;
use expskel_core::geometry::{polygon_area, segment_distance, Rect};
use expskel_core::skeleton::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn sum(terms: &[(C, C)]) -> ExpSum {
    ExpSum::planar(terms).unwrap()
}

fn unit(exps: &[C]) -> ExpSum {
    sum(&exps.iter().map(|&m| (c(0.0, 0.0), m)).collect::<Vec<_>>())
}

fn tri() -> ExpSum {
    unit(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)])
}

/// Index of the dominant term, by direct comparison of real exponents.
fn dominant(s: &ExpSum, z: C) -> usize {
    (0..s.len())
        .max_by(|&a, &b| (s.alpha(a) + s.planar_exponent(a) * z).re.total_cmp(&(s.alpha(b) + s.planar_exponent(b) * z).re))
        .unwrap()
}

/// Distance to the skeleton as the smallest circle about `z` on which the
/// dominant term changes, found by bisection on the radius.
fn circle_distance(s: &ExpSum, z: C, r_max: f64) -> f64 {
    let home = dominant(s, z);
    let hits = |r: f64| (0..4096).any(|k| dominant(s, z + C::from_polar(r, 2.0 * PI * k as f64 / 4096.0)) != home);
    let (mut lo, mut hi) = (0.0, r_max);
    if !hits(hi) {
        return f64::INFINITY;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if hits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn single_bisector() {
    let sk = build_skeleton_2d(&unit(&[c(0.0, 0.0), c(1.0, 0.0)]), &Rect::centered(2.0)).unwrap();
    assert_eq!(sk.cells.len(), 2);
    assert_eq!(sk.edges.len(), 1);
    let e = &sk.edges[0];
    assert_eq!(e.active, vec![0, 1]);
    assert!(e.start.re.abs() < 1e-12 && e.end.re.abs() < 1e-12);
    assert_relative_eq!(e.length(), 4.0, epsilon = 1e-12);
    assert!(sk.vertices.is_empty());
}

#[test]
fn three_term_tripod() {
    let sk = build_skeleton_2d(&tri(), &Rect::centered(2.0)).unwrap();
    assert_eq!(sk.cells.len(), 3);
    assert_eq!(sk.vertices.len(), 1);
    assert!(sk.vertices[0].point.norm() < 1e-12);
    assert_eq!(sk.vertices[0].active, vec![0, 1, 2]);
    assert!(sk.is_generic());
    let far = |e: &Edge| if e.start.norm() > e.end.norm() { e.start } else { e.end };
    let find = |a: Vec<usize>| sk.edges.iter().find(|e| e.active == a).map(far).unwrap();
    // {x=0, y>=0}, {y=0, x<=0}, {x=-y, x>=0}.
    assert!((find(vec![0, 1]) - c(0.0, 2.0)).norm() < 1e-12);
    assert!((find(vec![0, 2]) - c(-2.0, 0.0)).norm() < 1e-12);
    assert!((find(vec![1, 2]) - c(2.0, -2.0)).norm() < 1e-12);
    // Each edge midpoint is a tie by direct evaluation.
    for e in &sk.edges {
        let mid = 0.5 * (e.start + e.end);
        let v: Vec<f64> = e.active.iter().map(|&i| (tri().planar_exponent(i) * mid).re).collect();
        assert!((v[0] - v[1]).abs() < 1e-12);
    }
}

#[test]
fn collinear_exponents_share_one_edge() {
    let sk = build_skeleton_2d(&unit(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]), &Rect::centered(2.0)).unwrap();
    assert_eq!(sk.edges.len(), 1);
    assert_eq!(sk.edges[0].active, vec![0, 1, 2]);
    assert!(!sk.edges[0].is_generic());
    assert!(!sk.is_generic());
}

#[test]
fn dimension_two_is_rejected() {
    let s = ExpSum::new(2, [expskel_core::expsum::ExpTerm::new(c(0.0, 0.0), vec![c(1.0, 0.0), c(0.0, 0.0)])]).unwrap();
    assert!(matches!(build_skeleton_2d(&s, &Rect::centered(1.0)), Err(SkeletonError::NotPlanar(2))));
}

#[test]
fn locate_examples() {
    let loc = locate(&tri(), &[c(3.0, 0.0)], 0.5).unwrap();
    assert_eq!(loc.region, 1);
    assert_eq!(loc.near_set, vec![1]);
    assert_eq!(loc.active_span_dim, 0);
    assert_eq!(loc.in_u_c, vec![false, false, true]);

    let loc = locate(&tri(), &[c(0.0, 0.0)], 0.1).unwrap();
    assert_eq!(loc.active_span_dim, 2);
    assert!(loc.in_u_c[0]);

    let loc = locate(&unit(&[c(0.0, 0.0), c(1.0, 0.0)]), &[c(0.05, 0.0)], 0.2).unwrap();
    let mut near = loc.near_set.clone();
    near.sort();
    assert_eq!(near, vec![0, 1]);
    assert!(loc.in_u_c[1]);
    assert!(!loc.in_u_c[0]);
}

#[test]
fn distance_examples() {
    let pair = unit(&[c(0.0, 0.0), c(1.0, 0.0)]);
    assert_relative_eq!(skeleton_distance(&pair, &[c(1.5, 0.0)]).unwrap(), 1.5);
    let z = c(1.0, 1.0);
    let d = skeleton_distance(&tri(), &[z]).unwrap();
    // Nearest edge is the ray {x = 0, y >= 0}; the diagonal ray is sqrt 2 away.
    assert_relative_eq!(d, 1.0, epsilon = 1e-12);
    assert_relative_eq!(circle_distance(&tri(), z, 4.0), 1.0, epsilon = 1e-6);
    let sk = build_skeleton_2d(&tri(), &Rect::centered(4.0)).unwrap();
    assert_relative_eq!(sk.distance(z).unwrap(), 1.0, epsilon = 1e-12);
    let diag = sk.edges.iter().find(|e| e.active == vec![1, 2]).unwrap();
    assert_relative_eq!(segment_distance(z, diag.start, diag.end), 2f64.sqrt(), epsilon = 1e-12);
    for e in &sk.edges {
        let mid = 0.5 * (e.start + e.end);
        assert!(skeleton_distance(&tri(), &[mid]).unwrap() < 1e-12);
    }
}

#[test]
fn distance_proxy_in_dimension_two() {
    let terms = [vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]];
    let s = ExpSum::new(2, terms.iter().map(|m| expskel_core::expsum::ExpTerm::new(c(0.0, 0.0), m.clone()))).unwrap();
    assert_relative_eq!(skeleton_distance(&s, &[c(0.7, 0.0), c(3.0, 1.0)]).unwrap(), 0.7, epsilon = 1e-12);
}

fn random_sum() -> impl Strategy<Value = ExpSum> {
    prop::collection::vec((-1.0..1.0f64, -PI..PI, -2.0..2.0f64, -2.0..2.0f64), 2..6).prop_filter_map("distinct", |v| {
        let t: Vec<(C, C)> = v.iter().map(|&(ar, ai, mr, mi)| (c(ar, ai), c(mr, mi))).collect();
        ExpSum::planar(&t).ok().filter(|s| s.len() == t.len())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn near_set_agrees_with_distance(s in random_sum(), pts in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 20), cc in 0.05..1.0f64) {
        let w = Rect::centered(3.0);
        let sk = build_skeleton_2d(&s, &w.expand(20.0)).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                let d = (s.planar_exponent(i) - s.planar_exponent(j)).norm();
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        for (x, y) in pts {
            let z = c(x, y);
            let loc = locate(&s, &[z], cc).unwrap();
            let dom = s.dominance(&[z], cc).unwrap();
            let gap2 = dom.gaps[1].1;
            prop_assert_eq!(loc.in_u_c[1], gap2 < cc);
            let d = skeleton_distance(&s, &[z]).unwrap();
            prop_assert!(gap2 <= hi * d + 1e-9);
            prop_assert!(d * lo <= gap2 + 1e-9);
            if let Some(dd) = sk.distance(z) {
                prop_assert!((dd - d).abs() < 1e-9 || dd > 19.0);
            }
        }
    }

    #[test]
    fn cells_partition_the_window(s in random_sum()) {
        let w = Rect::new(-2.0, -1.5, 2.5, 3.0);
        let sk = build_skeleton_2d(&s, &w).unwrap();
        let total: f64 = sk.cells.iter().map(|cell| polygon_area(&cell.polygon)).sum();
        prop_assert!((total - w.area()).abs() <= 1e-6 * w.area());
        for e in &sk.edges {
            prop_assert!(e.cells.len() >= 2);
        }
    }

    #[test]
    fn generic_sums_have_trivalent_skeletons(s in random_sum()) {
        let pts: Vec<ComplexVec> = s.exponent_points();
        let q = exponent_set_quality(&pts, 1, None).unwrap();
        prop_assume!(q.delta_set > 0.05);
        let sk = build_skeleton_2d(&s, &Rect::centered(4.0)).unwrap();
        prop_assert!(sk.is_generic(), "{:?}", sk);
    }
}
