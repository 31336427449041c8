//! Quantitative genericity of exponent sets.
//!
//! A simplex with vertices in ℂⁿ is measured in two ways. The real volume
//! treats ℂⁿ as ℝ²ⁿ. The complexified volume of `{0, v_1, …, v_k}` is the
//! 2k-volume of `{0, v_1, iv_1, …, v_k, iv_k}`, which vanishes exactly when the
//! edge vectors fail to be totally real. Quality is the worst normalised face
//! volume after scaling the simplex to unit diameter.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expsum::{ComplexVec, ExpSum};
use crate::geometry::Rect;
use crate::linalg::{distance, factorial, gram_volume, realify_rows};
use crate::skeleton::{build_skeleton_2d, SkeletonError};

/// Qualities at or below this count as degenerate.
pub const TOL_RANK: f64 = 1e-10;

/// Upper bound on the number of simplices an exhaustive scan may visit.
pub const MAX_SIMPLICES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenericityError {
    #[error("a simplex needs at least one vertex")]
    NoVertices,
    #[error("vertices have inconsistent dimensions")]
    DimensionMismatch,
    #[error("complexified volume needs at most n+1 = {max} vertices, got {got}")]
    TooManyVertices { max: usize, got: usize },
    #[error("{0} simplices exceed the enumeration limit")]
    TooManySimplices(usize),
    #[error("no admissible shift after {tries} draws (best margin {best_margin})")]
    ShiftNotFound { tries: usize, best_margin: f64 },
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMode {
    Real,
    Complexified,
}

/// Affine simplex in ℂⁿ given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<ComplexVec>,
}

impl Simplex {
    pub fn new(vertices: Vec<ComplexVec>) -> Result<Self, GenericityError> {
        let Some(first) = vertices.first() else {
            return Err(GenericityError::NoVertices);
        };
        let n = first.dim();
        if vertices.iter().any(|v| v.dim() != n) {
            return Err(GenericityError::DimensionMismatch);
        }
        Ok(Simplex { vertices })
    }

    /// Planar simplex from points of ℂ.
    pub fn planar(points: &[Complex64]) -> Result<Self, GenericityError> {
        Simplex::new(points.iter().map(|&p| ComplexVec(vec![p])).collect())
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].dim()
    }

    /// Simplex dimension `k` (one less than the vertex count).
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.vertices.len() {
            for j in i + 1..self.vertices.len() {
                d = d.max(distance(self.vertices[i].as_slice(), self.vertices[j].as_slice()));
            }
        }
        d
    }
}

fn volume_of(points: &[&[Complex64]], mode: VolumeMode) -> f64 {
    let k = points.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let base = points[0];
    let mut edges: Vec<Vec<Complex64>> = Vec::with_capacity(2 * k);
    for p in &points[1..] {
        let e: Vec<Complex64> = p.iter().zip(base).map(|(a, b)| a - b).collect();
        if mode == VolumeMode::Complexified {
            let je: Vec<Complex64> = e.iter().map(|c| c * Complex64::i()).collect();
            edges.push(e);
            edges.push(je);
        } else {
            edges.push(e);
        }
    }
    let refs: Vec<&[Complex64]> = edges.iter().map(|e| e.as_slice()).collect();
    gram_volume(&realify_rows(&refs)) / factorial(refs.len())
}

/// Volume of `s` in the requested mode.
///
/// The complexified volume is the volume of the 2k-simplex obtained by adding
/// `i·(v_j - v_0)` to every edge.
pub fn simplex_volume(s: &Simplex, mode: VolumeMode) -> Result<f64, GenericityError> {
    let n = s.ambient_dim();
    if mode == VolumeMode::Complexified && s.vertices.len() > n + 1 {
        return Err(GenericityError::TooManyVertices { max: n + 1, got: s.vertices.len() });
    }
    let pts: Vec<&[Complex64]> = s.vertices.iter().map(|v| v.as_slice()).collect();
    Ok(volume_of(&pts, mode))
}

/// Visits every subset of `0..n` with size in `sizes`, in lexicographic order.
fn for_each_subset<F: FnMut(&[usize])>(n: usize, min: usize, max: usize, mut f: F) {
    fn rec<F: FnMut(&[usize])>(n: usize, start: usize, min: usize, max: usize, cur: &mut Vec<usize>, f: &mut F) {
        if cur.len() >= min {
            f(cur);
        }
        if cur.len() == max {
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, i + 1, min, max, cur, f);
            cur.pop();
        }
    }
    let mut cur = Vec::new();
    rec(n, 0, min, max, &mut cur, &mut f);
}

/// Normalised volume term of one face: `Vol^{1/d}` (real) or `Vol^{1/2d}`
/// (complexified), where `d` is the face dimension.
fn face_term(points: &[&[Complex64]], scale: f64, mode: VolumeMode) -> f64 {
    let d = points.len() - 1;
    let vol = volume_of(points, mode);
    let real_dim = if mode == VolumeMode::Complexified { 2 * d } else { d };
    if vol / scale.powi(real_dim as i32) <= TOL_RANK {
        return 0.0;
    }
    match mode {
        VolumeMode::Real => vol.powf(1.0 / d as f64) / scale,
        VolumeMode::Complexified => vol.powf(1.0 / (2 * d) as f64) / scale,
    }
}

/// Quality `δ(s)`: the minimum normalised face volume over faces of dimension
/// `1..=k`, after scaling to unit diameter.
///
/// With `extra = Some(m)` in complexified mode, the faces also include every
/// simplex spanned by an `(l-1)`-face of `s` and `m`, for `l <= n`.
pub fn simplex_quality(
    s: &Simplex,
    mode: VolumeMode,
    extra: Option<&ComplexVec>,
) -> Result<f64, GenericityError> {
    let n = s.ambient_dim();
    let nv = s.vertices.len();
    if mode == VolumeMode::Complexified && nv > n + 1 {
        return Err(GenericityError::TooManyVertices { max: n + 1, got: nv });
    }
    if let Some(m) = extra {
        if m.dim() != n {
            return Err(GenericityError::DimensionMismatch);
        }
    }
    let diam = s.diameter();
    if nv >= 2 && diam == 0.0 {
        return Ok(0.0);
    }
    let scale = if diam > 0.0 { diam } else { 1.0 };
    let pts: Vec<&[Complex64]> = s.vertices.iter().map(|v| v.as_slice()).collect();
    let mut best: f64 = 1.0;
    for_each_subset(nv, 2, nv, |idx| {
        let face: Vec<&[Complex64]> = idx.iter().map(|&i| pts[i]).collect();
        best = best.min(face_term(&face, scale, mode));
    });
    if let (Some(m), VolumeMode::Complexified) = (extra, mode) {
        for_each_subset(nv, 1, n.min(nv), |idx| {
            let mut face: Vec<&[Complex64]> = idx.iter().map(|&i| pts[i]).collect();
            face.push(m.as_slice());
            best = best.min(face_term(&face, scale, mode));
        });
    }
    Ok(best)
}

/// Quality report for a finite exponent set.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericityReport {
    /// Worst real quality over simplices with at most `n+2` vertices.
    pub delta_r: f64,
    /// Worst complexified quality over simplices with at most `n+1` vertices.
    pub delta_c: f64,
    /// Same as `delta_c` with the origin added as an extra point.
    pub delta_c_origin: f64,
    /// `min(delta_r, delta_c)`.
    pub delta_set: f64,
    pub strongly_basic: bool,
    /// Vertex indices of a simplex attaining `delta_set`.
    pub witness: Vec<usize>,
    /// `(vertex count, worst quality among simplices of that size)`.
    pub margins: Vec<(usize, f64)>,
    /// Number of simplices inspected.
    pub simplices: usize,
}

/// Worst qualities of a point set in ℂⁿ.
///
/// `cutoff` restricts the scan to simplices whose vertices are pairwise
/// within that distance.
pub fn exponent_set_quality(
    points: &[ComplexVec],
    n: usize,
    cutoff: Option<f64>,
) -> Result<GenericityReport, GenericityError> {
    if points.iter().any(|p| p.dim() != n) {
        return Err(GenericityError::DimensionMismatch);
    }
    let np = points.len();
    let max_real = (n + 2).min(np);
    if cutoff.is_none() {
        let mut total: usize = 0;
        for s in 2..=max_real {
            total = total.saturating_add(binomial(np, s));
        }
        if total > MAX_SIMPLICES {
            return Err(GenericityError::TooManySimplices(total));
        }
    }
    let pts: Vec<&[Complex64]> = points.iter().map(|p| p.as_slice()).collect();
    let origin = ComplexVec::zeros(n);
    let mut report = GenericityReport {
        delta_r: 1.0,
        delta_c: 1.0,
        delta_c_origin: 1.0,
        delta_set: 1.0,
        strongly_basic: true,
        witness: Vec::new(),
        margins: (2..=max_real).map(|s| (s, 1.0)).collect(),
        simplices: 0,
    };
    let mut overflow = false;
    let mut cur = Vec::new();
    visit_cliques(&pts, cutoff, max_real, &mut cur, 0, &mut |idx: &[usize]| {
        if overflow {
            return;
        }
        report.simplices += 1;
        if report.simplices > MAX_SIMPLICES {
            overflow = true;
            return;
        }
        let s = Simplex { vertices: idx.iter().map(|&i| points[i].clone()).collect() };
        let dr = simplex_quality(&s, VolumeMode::Real, None).unwrap_or(0.0);
        let mut q = dr;
        report.delta_r = report.delta_r.min(dr);
        if idx.len() <= n + 1 {
            let dc = simplex_quality(&s, VolumeMode::Complexified, None).unwrap_or(0.0);
            let d0 = simplex_quality(&s, VolumeMode::Complexified, Some(&origin)).unwrap_or(0.0);
            report.delta_c = report.delta_c.min(dc);
            report.delta_c_origin = report.delta_c_origin.min(d0);
            q = q.min(dc);
        }
        let slot = &mut report.margins[idx.len() - 2].1;
        *slot = slot.min(q);
        if report.witness.is_empty() || q < report.delta_set {
            report.delta_set = q;
            report.witness = idx.to_vec();
        }
    });
    if overflow {
        return Err(GenericityError::TooManySimplices(report.simplices));
    }
    if np == 1 {
        report.witness = vec![0];
        let single = Simplex { vertices: vec![points[0].clone()] };
        report.delta_c_origin = simplex_quality(&single, VolumeMode::Complexified, Some(&origin))?;
    }
    report.strongly_basic = report.delta_set > TOL_RANK;
    Ok(report)
}

/// Enumerates index sets of size `2..=max` whose points are pairwise within
/// `cutoff`.
fn visit_cliques<F: FnMut(&[usize])>(
    pts: &[&[Complex64]],
    cutoff: Option<f64>,
    max: usize,
    cur: &mut Vec<usize>,
    start: usize,
    f: &mut F,
) {
    if cur.len() >= 2 {
        f(cur);
    }
    if cur.len() == max {
        return;
    }
    for i in start..pts.len() {
        if let Some(r) = cutoff {
            if cur.iter().any(|&j| distance(pts[i], pts[j]) > r) {
                continue;
            }
        }
        cur.push(i);
        visit_cliques(pts, cutoff, max, cur, i + 1, f);
        cur.pop();
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: usize = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// Active index sets of the strata met inside a window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimplexCatalog {
    /// Sorted term-index sets, deduplicated.
    pub simplices: Vec<Vec<usize>>,
}

impl SimplexCatalog {
    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    fn insert(&mut self, mut set: Vec<usize>) {
        set.sort_unstable();
        if !self.simplices.contains(&set) {
            self.simplices.push(set);
        }
    }
}

/// Genericity classes of a sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub strongly_basic: bool,
    /// `None` when the class cannot be decided (dimension above one without a
    /// strongly basic certificate).
    pub basic: Option<bool>,
    pub strictly_basic: Option<bool>,
    pub report: GenericityReport,
    pub catalog: SimplexCatalog,
    /// The window met no stratum, so `basic` holds vacuously.
    pub vacuous: bool,
}

/// Cataloguing the strata met in `window` for planar sums, then checking each
/// active set.
///
/// In the plane, a sum is basic when the active set along every edge is a
/// pair (a non-degenerate totally real segment) and strictly basic when in
/// addition every dominant exponent of a region is non-zero.
pub fn classify_sum(sum: &ExpSum, window: Option<&Rect>) -> Result<Classification, GenericityError> {
    let n = sum.dim();
    let points = sum.exponent_points();
    let report = exponent_set_quality(&points, n, None)?;
    let strongly = report.strongly_basic;
    let origin = ComplexVec::zeros(n);

    if n == 1 {
        let window = window.copied().unwrap_or_else(|| Rect::centered(8.0));
        let sk = build_skeleton_2d(sum, &window)?;
        let mut catalog = SimplexCatalog::default();
        for c in &sk.cells {
            catalog.insert(vec![c.term]);
        }
        for e in &sk.edges {
            catalog.insert(e.active.clone());
        }
        for v in &sk.vertices {
            catalog.insert(v.active.clone());
        }
        let vacuous = sk.cells.is_empty();
        let mut basic = true;
        let mut strictly = true;
        for set in &catalog.simplices {
            let simplex = Simplex { vertices: set.iter().map(|&i| points[i].clone()).collect() };
            match set.len() {
                1 => {
                    strictly &= simplex_quality(&simplex, VolumeMode::Complexified, Some(&origin))? > TOL_RANK;
                }
                2 => {
                    basic &= simplex_quality(&simplex, VolumeMode::Complexified, None)? > TOL_RANK;
                }
                _ => {
                    // Only vertices may carry three terms; on an edge they
                    // signal an affinely dependent active set.
                    let on_edge = sk.edges.iter().any(|e| &e.active == set);
                    if on_edge {
                        basic = false;
                    }
                }
            }
        }
        return Ok(Classification {
            strongly_basic: strongly,
            basic: Some(basic),
            strictly_basic: Some(basic && strictly),
            report,
            catalog,
            vacuous,
        });
    }

    // Without a skeleton in higher dimension, only the strongly basic route
    // gives a certificate.
    let (basic, strictly) = if strongly {
        let strictly = report.delta_c_origin > TOL_RANK;
        (Some(true), if strictly { Some(true) } else { None })
    } else {
        (None, None)
    };
    Ok(Classification {
        strongly_basic: strongly,
        basic,
        strictly_basic: strictly,
        report,
        catalog: SimplexCatalog::default(),
        vacuous: false,
    })
}

/// Outcome of a successful shift search.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOutcome {
    pub shift: ComplexVec,
    pub tries: usize,
    /// Worst `δ^ℂ_m` over the checked simplices.
    pub quality: f64,
}

/// Uniform sample from the ball of radius `r` in ℂⁿ.
fn sample_ball(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<Complex64> {
    loop {
        let v: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if norm2 <= 1.0 {
            return v.chunks(2).map(|c| Complex64::new(c[0] * r, c[1] * r)).collect();
        }
    }
}

/// Searches the ball `|m - anchor| <= c2` for a shift making the sum strictly
/// basic with margin `c3`.
///
/// A draw is accepted when every catalogued simplex with at most `n` vertices
/// has `δ^ℂ_m >= c3`. An empty catalog returns the anchor.
pub fn find_shift(
    sum: &ExpSum,
    catalog: &SimplexCatalog,
    anchor: &ComplexVec,
    c2: f64,
    c3: f64,
    seed: u64,
    max_tries: usize,
) -> Result<ShiftOutcome, GenericityError> {
    let n = sum.dim();
    if anchor.dim() != n {
        return Err(GenericityError::DimensionMismatch);
    }
    let checked: Vec<Simplex> = catalog
        .simplices
        .iter()
        .filter(|s| s.len() <= n)
        .map(|s| Simplex { vertices: s.iter().map(|&i| ComplexVec(sum.exponent(i).to_vec())).collect() })
        .collect();
    if checked.is_empty() {
        return Ok(ShiftOutcome { shift: anchor.clone(), tries: 0, quality: 1.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_margin = f64::NEG_INFINITY;
    for t in 1..=max_tries {
        let offset = sample_ball(&mut rng, n, c2);
        let m = ComplexVec(anchor.0.iter().zip(&offset).map(|(a, o)| a + o).collect());
        let mut worst: f64 = f64::INFINITY;
        for s in &checked {
            worst = worst.min(simplex_quality(s, VolumeMode::Complexified, Some(&m))?);
        }
        if worst >= c3 {
            return Ok(ShiftOutcome { shift: m, tries: t, quality: worst });
        }
        best_margin = best_margin.max(worst - c3);
    }
    Err(GenericityError::ShiftNotFound { tries: max_tries, best_margin })
}
