use approx::assert_relative_eq;
use expskel_core::expsum::{ComplexVec, ExpSum};
use expskel_core::genericity::*;
use expskel_core::geometry::Rect;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn planar(points: &[C]) -> Simplex {
    Simplex::planar(points).unwrap()
}

fn real_coords(v: &[C]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            d = -d;
        }
        d *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..n {
                m[r][k] -= f * m[col][k];
            }
        }
    }
    d
}

/// Volume from pairwise distances (Cayley–Menger), independent of any Gram
/// matrix or coordinate frame.
fn cayley_menger_volume(points: &[Vec<f64>]) -> f64 {
    let k = points.len() - 1;
    let n = points.len() + 1;
    let mut m = vec![vec![0.0; n]; n];
    for i in 1..n {
        m[0][i] = 1.0;
        m[i][0] = 1.0;
    }
    for i in 0..points.len() {
        for j in 0..points.len() {
            m[i + 1][j + 1] = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    }
    let fact: f64 = (1..=k).map(|x| x as f64).product();
    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let v2 = sign * det(m) / (2f64.powi(k as i32) * fact * fact);
    v2.max(0.0).sqrt()
}

/// Vertices of the doubled simplex `{0, v_j, i v_j}` in real coordinates.
fn doubled(points: &[Vec<C>]) -> Vec<Vec<f64>> {
    let base = &points[0];
    let mut out = vec![vec![0.0; 2 * base.len()]];
    for p in &points[1..] {
        let e: Vec<C> = p.iter().zip(base).map(|(a, b)| a - b).collect();
        out.push(real_coords(&e));
        out.push(real_coords(&e.iter().map(|z| z * C::i()).collect::<Vec<_>>()));
    }
    out
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

/// Brute-force quality over all faces of dimension 1..=k.
fn brute_quality(points: &[Vec<C>], complexified: bool) -> f64 {
    let diam = points
        .iter()
        .flat_map(|a| points.iter().map(move |b| a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()))
        .fold(0.0, f64::max);
    let mut best = f64::INFINITY;
    for size in 2..=points.len() {
        for face in subsets(points.len(), size) {
            let pts: Vec<Vec<C>> = face.iter().map(|&i| points[i].iter().map(|z| z / diam).collect()).collect();
            let d = (size - 1) as f64;
            let term = if complexified {
                cayley_menger_volume(&doubled(&pts)).powf(1.0 / (2.0 * d))
            } else {
                let real: Vec<Vec<f64>> = pts.iter().map(|p| real_coords(p)).collect();
                cayley_menger_volume(&real).powf(1.0 / d)
            };
            best = best.min(term);
        }
    }
    best
}

fn vecs(points: &[C]) -> Vec<Vec<C>> {
    points.iter().map(|&p| vec![p]).collect()
}

#[test]
fn volume_examples() {
    let seg = planar(&[c(0.0, 0.0), c(1.0, 0.0)]);
    assert_relative_eq!(simplex_volume(&seg, VolumeMode::Complexified).unwrap(), 0.5, epsilon = 1e-14);
    let tri = planar(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]);
    assert_relative_eq!(simplex_volume(&tri, VolumeMode::Real).unwrap(), 0.5, epsilon = 1e-14);
    // Complexified volume scales with the square of the diameter.
    let long = planar(&[c(0.0, 0.0), c(2.0, 0.0)]);
    assert_relative_eq!(simplex_volume(&long, VolumeMode::Complexified).unwrap(), 2.0, epsilon = 1e-14);
    assert!(matches!(
        simplex_volume(&tri, VolumeMode::Complexified),
        Err(GenericityError::TooManyVertices { max: 2, got: 3 })
    ));
}

#[test]
fn quality_examples_match_brute_force() {
    let cases: [(&[C], VolumeMode); 3] = [
        (&[c(0.0, 0.0), c(1.0, 0.0)], VolumeMode::Complexified),
        (&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)], VolumeMode::Real),
        (&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)], VolumeMode::Real),
    ];
    let expected = [0.5f64.sqrt(), 0.5, 0.0];
    for ((pts, mode), want) in cases.iter().zip(expected) {
        let got = simplex_quality(&planar(pts), *mode, None).unwrap();
        let oracle = brute_quality(&vecs(pts), *mode == VolumeMode::Complexified);
        assert_relative_eq!(oracle, want, epsilon = 1e-7);
        assert_relative_eq!(got, want, epsilon = 1e-12);
    }
}

#[test]
fn set_quality_examples() {
    let pts = |v: &[C]| v.iter().map(|&p| ComplexVec(vec![p])).collect::<Vec<_>>();
    let r = exponent_set_quality(&pts(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]), 1, None).unwrap();
    assert_relative_eq!(r.delta_set, 0.5, epsilon = 1e-12);
    assert!(r.strongly_basic);
    let r = exponent_set_quality(&pts(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]), 1, None).unwrap();
    assert!(r.delta_set < TOL_RANK);
    assert!(!r.strongly_basic);
    assert_eq!(r.witness, vec![0, 1, 2]);
    let r = exponent_set_quality(&pts(&[c(0.0, 0.0), c(1.0, 0.0)]), 1, None).unwrap();
    assert_relative_eq!(r.delta_set, 0.5f64.sqrt(), epsilon = 1e-12);
}

#[test]
fn cutoff_skips_long_edges() {
    let pts: Vec<ComplexVec> = [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)].iter().map(|&p| ComplexVec(vec![p])).collect();
    let r = exponent_set_quality(&pts, 1, Some(1.5)).unwrap();
    assert!(r.strongly_basic);
}

fn sum(exps: &[C]) -> ExpSum {
    let t: Vec<(C, C)> = exps.iter().map(|&m| (c(0.0, 0.0), m)).collect();
    ExpSum::planar(&t).unwrap()
}

#[test]
fn classification_examples() {
    let w = Rect::centered(5.0);
    let three = classify_sum(&sum(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]), Some(&w)).unwrap();
    assert!(three.strongly_basic);
    assert_eq!(three.basic, Some(true));
    // The region of the constant term has dominant exponent zero.
    assert_eq!(three.strictly_basic, Some(false));

    let line = classify_sum(&sum(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]), Some(&w)).unwrap();
    assert!(!line.strongly_basic);
    // The edge x = 0 carries all three terms.
    assert_eq!(line.basic, Some(false));

    let pair = classify_sum(&sum(&[c(0.0, 0.0), c(1.0, 0.0)]), Some(&w)).unwrap();
    assert!(pair.strongly_basic);
    assert_eq!(pair.basic, Some(true));
    assert_eq!(pair.strictly_basic, Some(false));

    let shifted = classify_sum(&sum(&[c(1.0, 1.0), c(2.0, 1.0), c(1.0, 2.0)]), Some(&w)).unwrap();
    assert_eq!(shifted.strictly_basic, Some(true));
}

#[test]
fn classification_in_dimension_two() {
    let terms = [
        vec![c(0.0, 0.0), c(0.0, 0.0)],
        vec![c(1.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0)],
    ];
    let s = ExpSum::new(2, terms.iter().map(|m| expskel_core::expsum::ExpTerm::new(c(0.0, 0.0), m.clone()))).unwrap();
    let cl = classify_sum(&s, None).unwrap();
    assert!(cl.strongly_basic);
    assert_eq!(cl.basic, Some(true));
}

#[test]
fn shift_search_examples() {
    let s = sum(&[c(0.0, 0.0), c(1.0, 0.0)]);
    let cl = classify_sum(&s, Some(&Rect::centered(5.0))).unwrap();
    let anchor = ComplexVec::zeros(1);
    let out = find_shift(&s, &cl.catalog, &anchor, 0.5, 0.1, 0, 100).unwrap();
    assert!(out.shift.0[0].norm() <= 0.5);
    assert!(out.quality >= 0.1);

    // Per-draw success rate, one draw per seed.
    let hits = (0..1000u64).filter(|&seed| find_shift(&s, &cl.catalog, &anchor, 0.5, 0.1, seed, 1).is_ok()).count();
    assert!(hits >= 900, "success rate {hits}/1000");

    let empty = SimplexCatalog::default();
    let same = find_shift(&s, &empty, &ComplexVec(vec![c(0.3, 0.1)]), 0.5, 0.1, 0, 10).unwrap();
    assert_eq!(same.shift.0[0], c(0.3, 0.1));

    let err = find_shift(&s, &cl.catalog, &anchor, 0.5, 10.0, 0, 50).unwrap_err();
    assert!(matches!(err, GenericityError::ShiftNotFound { tries: 50, .. }));
}

fn point2() -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2).prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn complexified_volume_is_base_independent(pts in prop::collection::vec(point2(), 3)) {
        let s = Simplex::new(pts.iter().map(|p| ComplexVec(p.clone())).collect()).unwrap();
        let v = simplex_volume(&s, VolumeMode::Complexified).unwrap();
        for rot in 1..3 {
            let mut r = pts.clone();
            r.rotate_left(rot);
            let s2 = Simplex::new(r.iter().map(|p| ComplexVec(p.clone())).collect()).unwrap();
            let v2 = simplex_volume(&s2, VolumeMode::Complexified).unwrap();
            prop_assert!((v - v2).abs() <= 1e-10 * v.max(1e-12));
        }
        let oracle = cayley_menger_volume(&doubled(&pts));
        prop_assert!((v - oracle).abs() <= 1e-7 * v.max(1e-3));
    }

    #[test]
    fn quality_is_scale_invariant(pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3), lambda in 0.01..100.0f64) {
        let p: Vec<C> = pts.iter().map(|&(a, b)| c(a, b)).collect();
        prop_assume!((p[0] - p[1]).norm() > 1e-3 && (p[1] - p[2]).norm() > 1e-3 && (p[0] - p[2]).norm() > 1e-3);
        let q: Vec<C> = p.iter().map(|z| z * lambda).collect();
        let a = simplex_quality(&planar(&p), VolumeMode::Real, None).unwrap();
        let b = simplex_quality(&planar(&q), VolumeMode::Real, None).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1e-10));
        let oracle = brute_quality(&vecs(&p), false);
        prop_assert!((a - oracle).abs() <= 1e-6);
    }

    #[test]
    fn extra_point_never_raises_quality(pts in prop::collection::vec(point2(), 2), m in point2()) {
        let s = Simplex::new(pts.iter().map(|p| ComplexVec(p.clone())).collect()).unwrap();
        let plain = simplex_quality(&s, VolumeMode::Complexified, None).unwrap();
        let with = simplex_quality(&s, VolumeMode::Complexified, Some(&ComplexVec(m))).unwrap();
        prop_assert!(with <= plain + 1e-12);
    }

    #[test]
    fn total_reality_matches_rank(pts in prop::collection::vec(point2(), 3), degenerate in any::<bool>()) {
        let mut pts = pts;
        if degenerate {
            // Put the third edge in the complex span of the first.
            let e: Vec<C> = pts[1].iter().zip(&pts[0]).map(|(a, b)| (a - b) * c(0.3, -0.7)).collect();
            pts[2] = pts[0].iter().zip(&e).map(|(a, b)| a + b).collect();
        }
        let s = Simplex::new(pts.iter().map(|p| ComplexVec(p.clone())).collect()).unwrap();
        let q = simplex_quality(&s, VolumeMode::Complexified, None).unwrap();
        let mut rows = Vec::new();
        for p in &pts[1..] {
            let e: Vec<C> = p.iter().zip(&pts[0]).map(|(a, b)| a - b).collect();
            rows.push(real_coords(&e));
            rows.push(real_coords(&e.iter().map(|z| z * C::i()).collect::<Vec<_>>()));
        }
        let m = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i][j]);
        let sv = m.singular_values();
        let rank = sv.iter().filter(|&&x| x > 1e-8 * sv.max()).count();
        prop_assert_eq!(q > TOL_RANK, rank == 4);
    }

    #[test]
    fn strongly_basic_implies_basic(pts in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 3..6)) {
        let exps: Vec<C> = pts.iter().map(|&(a, b)| c(a, b)).collect();
        let s = sum(&exps);
        prop_assume!(s.len() == exps.len());
        let cl = classify_sum(&s, Some(&Rect::centered(6.0))).unwrap();
        prop_assume!(cl.strongly_basic);
        prop_assert_eq!(cl.basic, Some(true));
    }
}
