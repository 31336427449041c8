//! Zeros and critical points of exponential sums.
//!
//! Planar roots are found by Newton iterations seeded near the skeleton and
//! then certified with the argument principle: the winding number on the
//! search box is compared with the roots found, and boxes that disagree are
//! split until every root is accounted for. In dimension two only critical
//! points are isolated; they are found by seeded Newton without a count
//! certificate.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expsum::{ComplexVec, ExpSum, ExpSumError};
use crate::geometry::Rect;
use crate::skeleton::{locate, SkeletonError};

/// Roots closer than this are merged.
pub const MERGE_RADIUS: f64 = 1e-6;
/// Accepted normalised residual `e^{-b}|f|` of a root.
pub const NEWTON_TOL: f64 = 1e-10;
/// A contour passing closer than this (normalised) to a root is rejected.
pub const CONTOUR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("root finding supports dimension 1 and 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("zeros of a single function of {0} variables are not isolated")]
    NotIsolated(usize),
    #[error("expected {expected} window(s), got {found}")]
    WindowMismatch { expected: usize, found: usize },
    #[error("the target function passes within {min_modulus:e} of zero on the contour")]
    RootOnContour { min_modulus: f64 },
    #[error("argument increments did not settle (last estimate {estimate})")]
    WindingNotConverged { estimate: f64 },
    #[error("the derivative vanishes identically")]
    ConstantFunction,
    #[error("{mismatch} root(s) could not be located inside the window")]
    Incomplete { mismatch: i64 },
    #[error("containment needs c > log l = {log_l}, got {c}")]
    ConstantTooSmall { c: f64, log_l: f64 },
    #[error(transparent)]
    Sum(#[from] ExpSumError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMode {
    Zeros,
    Critical,
    CriticalZeros,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Root {
    pub location: ComplexVec,
    pub multiplicity: u32,
    /// Normalised residual of the target system.
    pub residual: f64,
    /// Within [`MERGE_RADIUS`] of the window boundary.
    pub near_boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSet {
    pub points: Vec<Root>,
    pub mode: RootMode,
    /// Winding number on the certified search contour (planar only).
    pub certified_count: Option<i64>,
}

impl RootSet {
    /// Total multiplicity of the roots.
    pub fn total(&self) -> u64 {
        self.points.iter().map(|r| r.multiplicity as u64).sum()
    }

    /// Planar locations.
    pub fn planar_points(&self) -> Vec<Complex64> {
        self.points.iter().map(|r| r.location.0[0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindingTarget {
    Value,
    Derivative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contour {
    Circle { center: Complex64, radius: f64 },
    Box(Rect),
}

impl Contour {
    fn point(&self, t: f64) -> Complex64 {
        match *self {
            Contour::Circle { center, radius } => center + Complex64::from_polar(radius, 2.0 * PI * t),
            Contour::Box(r) => {
                let (w, h) = (r.width(), r.height());
                let per = 2.0 * (w + h);
                let s = t * per;
                if s <= w {
                    Complex64::new(r.x0 + s, r.y0)
                } else if s <= w + h {
                    Complex64::new(r.x1, r.y0 + (s - w))
                } else if s <= 2.0 * w + h {
                    Complex64::new(r.x1 - (s - w - h), r.y1)
                } else {
                    Complex64::new(r.x0, r.y1 - (s - 2.0 * w - h))
                }
            }
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Contour::Circle { radius, .. } => 2.0 * PI * radius,
            Contour::Box(r) => 2.0 * (r.width() + r.height()),
        }
    }

    fn bounding_box(&self) -> Rect {
        match *self {
            Contour::Circle { center, radius } => {
                Rect::new(center.re - radius, center.im - radius, center.re + radius, center.im + radius)
            }
            Contour::Box(r) => r,
        }
    }
}

fn require_planar(sum: &ExpSum) -> Result<(), SolveError> {
    if sum.dim() != 1 {
        Err(SolveError::UnsupportedDimension(sum.dim()))
    } else {
        Ok(())
    }
}

/// Prepares a planar sum for work on `bbox`: drops negligible terms and
/// removes the common frame of the dominant term at the centre. Neither step
/// moves zeros or changes winding numbers.
fn localize(sum: &ExpSum, bbox: &Rect) -> ExpSum {
    let r = bbox.expand(1e-3 * bbox.diameter().max(1e-12));
    let (pruned, _) = sum.prune_planar(r.x0, r.y0, r.x1, r.y1);
    let c = [bbox.center()];
    let dom = pruned.dominance(&c, 0.0).expect("planar");
    let m = pruned.exponent(dom.gaps[0].0).to_vec();
    pruned.transform(Some(&m), None).expect("planar")
}

/// Terms further than this below the maximum on a whole sample grid do not
/// set the length scale.
const ACTIVE_GAP: f64 = 30.0;

/// Largest exponent modulus, after [`localize`], among the terms that come
/// within [`ACTIVE_GAP`] of the maximum somewhere on a coarse grid of `b`.
fn exponent_scale(sum: &ExpSum, b: &Rect) -> f64 {
    let n = sum.len();
    let mut active = vec![false; n];
    let mut reals = vec![0.0; n];
    let mut mark = |z: Complex64| {
        for (i, r) in reals.iter_mut().enumerate() {
            *r = sum.alpha(i).re + (sum.planar_exponent(i) * z).re;
        }
        let top = reals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (a, r) in active.iter_mut().zip(&reals) {
            *a |= top - r <= ACTIVE_GAP;
        }
    };
    for z in b.corners() {
        mark(z);
    }
    for z in b.grid(16, 16) {
        mark(z);
    }
    (0..n).filter(|&i| active[i]).map(|i| sum.planar_exponent(i).norm()).fold(0.0, f64::max)
}

/// Whether at least two terms lie within `c` of the maximum at `z`.
fn near_tie(sum: &ExpSum, z: Complex64, c: f64) -> bool {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..sum.len() {
        let r = sum.alpha(i).re + (sum.planar_exponent(i) * z).re;
        if r > first {
            second = first;
            first = r;
        } else if r > second {
            second = r;
        }
    }
    first - second <= c
}

struct ArgTrace {
    total: f64,
    min_modulus: f64,
}

fn scaled_value(sum: &ExpSum, z: Complex64) -> Complex64 {
    sum.planar_jet(z).value
}

fn refine_segment(
    sum: &ExpSum,
    contour: &Contour,
    t0: f64,
    t1: f64,
    v0: Complex64,
    v1: Complex64,
    depth: u32,
    trace: &mut ArgTrace,
) -> f64 {
    let tm = 0.5 * (t0 + t1);
    let vm = scaled_value(sum, contour.point(tm));
    trace.min_modulus = trace.min_modulus.min(vm.norm());
    let whole = (v1 / v0).arg();
    let a = (vm / v0).arg();
    let b = (v1 / vm).arg();
    let consistent = (a + b - whole).abs() < 1e-9 && a.abs() + b.abs() < 0.5 * PI;
    if consistent || depth == 0 {
        a + b
    } else {
        refine_segment(sum, contour, t0, tm, v0, vm, depth - 1, trace)
            + refine_segment(sum, contour, tm, t1, vm, v1, depth - 1, trace)
    }
}

fn arg_change(sum: &ExpSum, contour: &Contour, samples: usize) -> ArgTrace {
    let mut trace = ArgTrace { total: 0.0, min_modulus: f64::INFINITY };
    let mut prev = scaled_value(sum, contour.point(0.0));
    trace.min_modulus = prev.norm();
    let first = prev;
    for k in 1..=samples {
        let t1 = k as f64 / samples as f64;
        let v1 = if k == samples { first } else { scaled_value(sum, contour.point(t1)) };
        trace.min_modulus = trace.min_modulus.min(v1.norm());
        let t0 = (k - 1) as f64 / samples as f64;
        trace.total += refine_segment(sum, contour, t0, t1, prev, v1, 24, &mut trace);
        prev = v1;
    }
    trace
}

/// Winding number of a planar exponential sum around a contour.
///
/// The initial sampling is doubled until two successive estimates agree; each
/// pass refines segments whose argument jump is large.
fn winding_planar(sum: &ExpSum, contour: &Contour, samples: usize) -> Result<i64, SolveError> {
    let local = localize(sum, &contour.bounding_box());
    let scale = exponent_scale(&local, &contour.bounding_box());
    let base = ((contour.length() * scale / (0.25 * PI)).ceil() as usize).max(samples).max(16);
    let mut n = base;
    let mut last: Option<i64> = None;
    for _ in 0..8 {
        let trace = arg_change(&local, contour, n);
        if trace.min_modulus < CONTOUR_TOL {
            return Err(SolveError::RootOnContour { min_modulus: trace.min_modulus });
        }
        let est = trace.total / (2.0 * PI);
        let rounded = est.round();
        if (est - rounded).abs() < 0.1 {
            let w = rounded as i64;
            if last == Some(w) {
                return Ok(w);
            }
            last = Some(w);
        } else {
            last = None;
        }
        n *= 2;
    }
    Err(SolveError::WindingNotConverged { estimate: last.map_or(f64::NAN, |w| w as f64) })
}

/// Counts zeros of `μ` (or of `dμ`) inside a contour by the argument
/// principle.
pub fn count_winding(
    sum: &ExpSum,
    target: WindingTarget,
    contour: &Contour,
    samples: usize,
) -> Result<i64, SolveError> {
    require_planar(sum)?;
    match target {
        WindingTarget::Value => winding_planar(sum, contour, samples),
        WindingTarget::Derivative => match sum.derivative(0) {
            Some(d) => winding_planar(&d, contour, samples),
            None => Err(SolveError::ConstantFunction),
        },
    }
}

/// Newton iteration on a planar sum from `z`, with steps capped at `max_step`.
fn newton_planar(sum: &ExpSum, mut z: Complex64, max_step: f64, bounds: &Rect) -> Option<(Complex64, f64)> {
    for _ in 0..80 {
        let j = sum.planar_jet(z);
        if j.d1.norm() == 0.0 {
            return None;
        }
        let mut step = j.value / j.d1;
        let sn = step.norm();
        if !sn.is_finite() {
            return None;
        }
        if sn > max_step {
            step *= max_step / sn;
        }
        z -= step;
        if !bounds.contains(z) {
            return None;
        }
        if sn < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    let res = residual(sum, z);
    if res < NEWTON_TOL {
        Some((z, res))
    } else {
        None
    }
}

/// `e^{-b(z)} |f(z)|`.
pub fn residual(sum: &ExpSum, z: Complex64) -> f64 {
    sum.planar_jet(z).value.norm()
}

fn insert_root(roots: &mut Vec<(Complex64, f64)>, z: Complex64, res: f64) -> bool {
    if roots.iter().any(|(w, _)| (w - z).norm() < MERGE_RADIUS) {
        false
    } else {
        roots.push((z, res));
        true
    }
}

struct PlanarSolver<'a> {
    f: &'a ExpSum,
    outer: Rect,
    max_step: f64,
    newton_bounds: Rect,
    roots: Vec<(Complex64, f64)>,
    mults: Vec<u32>,
    rng: ChaCha8Rng,
}

impl PlanarSolver<'_> {
    fn try_newton(&mut self, z: Complex64) {
        if let Some((r, res)) = newton_planar(self.f, z, self.max_step, &self.newton_bounds) {
            if insert_root(&mut self.roots, r, res) {
                let others: Vec<Complex64> = self.roots.iter().map(|p| p.0).collect();
                self.mults.push(multiplicity(self.f, r, &others));
            }
        }
    }

    /// Roots found in `b`, counted with multiplicity.
    fn count_inside(&self, b: &Rect) -> i64 {
        self.roots.iter().zip(&self.mults).filter(|((z, _), _)| b.contains(*z)).map(|(_, &m)| m as i64).sum()
    }

    /// Splits `b` at jittered interior lines into four children whose
    /// boundaries avoid roots, returning them with their winding numbers.
    fn split(&mut self, b: &Rect) -> Result<Vec<(Rect, i64)>, SolveError> {
        let mut last_err = SolveError::RootOnContour { min_modulus: 0.0 };
        for _ in 0..12 {
            let fx: f64 = 0.5 + self.rng.random_range(-0.05..0.05);
            let fy: f64 = 0.5 + self.rng.random_range(-0.05..0.05);
            let xm = b.x0 + fx * b.width();
            let ym = b.y0 + fy * b.height();
            let kids = [
                Rect::new(b.x0, b.y0, xm, ym),
                Rect::new(xm, b.y0, b.x1, ym),
                Rect::new(b.x0, ym, xm, b.y1),
                Rect::new(xm, ym, b.x1, b.y1),
            ];
            let mut out = Vec::with_capacity(4);
            let mut ok = true;
            for k in kids {
                match winding_planar(self.f, &Contour::Box(k), 16) {
                    Ok(w) => out.push((k, w)),
                    Err(e) => {
                        last_err = e;
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok(out);
            }
        }
        Err(last_err)
    }

    fn resolve(&mut self, b: Rect, winding: i64, depth: u32) -> Result<(), SolveError> {
        if self.count_inside(&b) >= winding {
            return Ok(());
        }
        // Fresh seeds in the disagreeing box first; splitting is the fallback.
        for z in b.grid(3, 3).collect::<Vec<_>>() {
            self.try_newton(z);
        }
        if self.count_inside(&b) >= winding {
            return Ok(());
        }
        if depth == 0 || b.diameter() < 1e-9 * self.outer.diameter() {
            return Err(SolveError::Incomplete { mismatch: winding - self.count_inside(&b) });
        }
        for (kid, w) in self.split(&b)? {
            if w > 0 {
                self.resolve(kid, w, depth - 1)?;
            }
        }
        Ok(())
    }
}

/// Picks a box slightly larger than `window` whose boundary avoids the roots.
fn certified_outer(f: &ExpSum, window: &Rect) -> Result<(Rect, i64), SolveError> {
    let d = window.diameter();
    let mut last = SolveError::RootOnContour { min_modulus: 0.0 };
    for k in 0..10 {
        let pad = 2.0 * MERGE_RADIUS * (1.0 + k as f64 * 0.37) + 1e-9 * d;
        let outer = window.expand(pad);
        match winding_planar(f, &Contour::Box(outer), 16) {
            Ok(w) => return Ok((outer, w)),
            Err(e @ SolveError::RootOnContour { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// All zeros of a planar sum in `window`, certified by the argument
/// principle. Returns `(roots, winding on the certified contour)`.
fn planar_zeros(
    target: &ExpSum,
    window: &Rect,
    grid_density: usize,
    seed: u64,
) -> Result<(Vec<(Complex64, f64)>, i64), SolveError> {
    let f = localize(target, window);
    let (outer, total) = certified_outer(&f, window)?;
    let scale = exponent_scale(&f, &outer).max(1e-12);
    let mut solver = PlanarSolver {
        f: &f,
        outer,
        max_step: 2.0 / scale,
        newton_bounds: outer.expand(0.5 * outer.diameter()),
        roots: Vec::new(),
        mults: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    if total > 0 {
        let g = grid_density.max(4);
        let h = (outer.width().max(outer.height()) / g as f64).min(1.0 / scale);
        let nx = ((outer.width() / h).ceil() as usize).max(1);
        let ny = ((outer.height() / h).ceil() as usize).max(1);
        let c_seed = (f.len() as f64).ln() + 1.0;
        for z in outer.grid(nx, ny).collect::<Vec<_>>() {
            if near_tie(&f, z, c_seed) {
                solver.try_newton(z);
            }
        }
        solver.resolve(outer, total, 40)?;
    }
    let mut roots: Vec<(Complex64, f64)> = solver.roots.into_iter().filter(|(z, _)| outer.contains(*z)).collect();
    roots.sort_by(|a, b| {
        a.0.re.partial_cmp(&b.0.re).unwrap_or(core::cmp::Ordering::Equal).then(
            a.0.im.partial_cmp(&b.0.im).unwrap_or(core::cmp::Ordering::Equal),
        )
    });
    Ok((roots, total))
}

/// Multiplicity of a root from the winding on a small circle.
///
/// Radii grow until the circle clears the tolerance (multiple roots are
/// flat), but stay below half the distance to any other known root.
fn multiplicity(f: &ExpSum, z: Complex64, others: &[Complex64]) -> u32 {
    let gap = others.iter().map(|w| (w - z).norm()).filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    for r in [10.0, 3.0, 30.0, 100.0, 300.0, 1000.0].map(|k| k * MERGE_RADIUS) {
        if r >= 0.5 * gap {
            break;
        }
        if let Ok(w) = winding_planar(f, &Contour::Circle { center: z, radius: r }, 32) {
            if w >= 1 {
                return w as u32;
            }
        }
    }
    1
}

/// Seeded options for [`find_roots`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Seed points per window side (per real axis in dimension two).
    pub grid_density: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { grid_density: 64, seed: 0 }
    }
}

/// Zeros, critical points or critical zeros of `sum` inside the product of
/// `windows` (one rectangle per coordinate).
pub fn find_roots(
    sum: &ExpSum,
    windows: &[Rect],
    mode: RootMode,
    opts: SolveOptions,
) -> Result<RootSet, SolveError> {
    let n = sum.dim();
    if windows.len() != n {
        return Err(SolveError::WindowMismatch { expected: n, found: windows.len() });
    }
    match n {
        1 => planar_roots(sum, &windows[0], mode, opts),
        2 => {
            if mode == RootMode::Zeros {
                return Err(SolveError::NotIsolated(2));
            }
            product_roots(sum, windows, mode, opts)
        }
        _ => Err(SolveError::UnsupportedDimension(n)),
    }
}

/// Planar convenience wrapper around [`find_roots`].
pub fn find_planar_roots(
    sum: &ExpSum,
    window: &Rect,
    mode: RootMode,
    opts: SolveOptions,
) -> Result<RootSet, SolveError> {
    find_roots(sum, core::slice::from_ref(window), mode, opts)
}

fn planar_roots(sum: &ExpSum, window: &Rect, mode: RootMode, opts: SolveOptions) -> Result<RootSet, SolveError> {
    let derivative = || sum.derivative(0).ok_or(SolveError::ConstantFunction);
    let (target, check_value) = match mode {
        RootMode::Zeros => (sum.clone(), false),
        RootMode::Critical => (derivative()?, false),
        RootMode::CriticalZeros => (derivative()?, true),
    };
    let (raw, total) = planar_zeros(&target, window, opts.grid_density, opts.seed)?;
    let local_target = localize(&target, window);
    let local_value = localize(sum, window);
    let locs: Vec<Complex64> = raw.iter().map(|r| r.0).collect();
    let mut points = Vec::new();
    for (z, res) in raw {
        if !window.expand(MERGE_RADIUS).contains(z) {
            continue;
        }
        if check_value && residual(&local_value, z) > 1e-8 {
            continue;
        }
        let mult = multiplicity(&local_target, z, &locs);
        let mult = if check_value {
            mult.min(multiplicity(&local_value, z, &locs).saturating_sub(1).max(1))
        } else {
            mult
        };
        points.push(Root {
            location: ComplexVec(vec![z]),
            multiplicity: mult,
            residual: res,
            near_boundary: window.inner_distance(z) <= MERGE_RADIUS,
        });
    }
    let certified = if mode == RootMode::CriticalZeros { None } else { Some(total) };
    Ok(RootSet { points, mode, certified_count: certified })
}

/// Solves `A x = b` for a small dense complex system by Gaussian elimination.
fn solve_dense(mut a: Vec<Complex64>, mut b: Vec<Complex64>, n: usize) -> Option<Vec<Complex64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i * n + col].norm().partial_cmp(&a[j * n + col].norm()).unwrap_or(core::cmp::Ordering::Equal)
        })?;
        if a[piv * n + col].norm() == 0.0 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            b.swap(piv, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                let t = a[col * n + k];
                a[row * n + k] -= f * t;
            }
            let t = b[col];
            b[row] -= f * t;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    Some(x)
}

/// Newton (critical points) or Gauss-Newton (critical zeros) on ℂ².
fn newton_product(sum: &ExpSum, start: &[Complex64], mode: RootMode, max_step: f64) -> Option<(Vec<Complex64>, f64)> {
    let n = sum.dim();
    let mut z = start.to_vec();
    let resid = |z: &[Complex64]| -> Option<f64> {
        let j = sum.scaled_jet(z, 1).ok()?.jet;
        let g: f64 = j.gradient.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        Some(if mode == RootMode::CriticalZeros { g + j.value.norm() } else { g })
    };
    for _ in 0..80 {
        let sj = sum.scaled_jet(&z, 2).ok()?.jet;
        let step = if mode == RootMode::Critical {
            solve_dense(sj.hessian.clone(), sj.gradient.iter().map(|g| -g).collect(), n)?
        } else {
            // Rows: value (gradient row) and gradient (Hessian rows).
            let mut rows: Vec<Vec<Complex64>> = vec![sj.gradient.clone()];
            let mut rhs = vec![-sj.value];
            for r in 0..n {
                rows.push(sj.hessian[r * n..(r + 1) * n].to_vec());
                rhs.push(-sj.gradient[r]);
            }
            let mut ata = vec![Complex64::new(0.0, 0.0); n * n];
            let mut atb = vec![Complex64::new(0.0, 0.0); n];
            for (row, r) in rows.iter().zip(&rhs) {
                for i in 0..n {
                    atb[i] += row[i].conj() * r;
                    for k in 0..n {
                        ata[i * n + k] += row[i].conj() * row[k];
                    }
                }
            }
            solve_dense(ata, atb, n)?
        };
        let sn = step.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !sn.is_finite() {
            return None;
        }
        let shrink = if sn > max_step { max_step / sn } else { 1.0 };
        for (zi, s) in z.iter_mut().zip(&step) {
            *zi += s * shrink;
        }
        if sn < 1e-15 * (1.0 + z.iter().map(|c| c.norm()).fold(0.0, f64::max)) {
            break;
        }
    }
    let r = resid(&z)?;
    (r < NEWTON_TOL).then_some((z, r))
}

fn product_roots(sum: &ExpSum, windows: &[Rect], mode: RootMode, opts: SolveOptions) -> Result<RootSet, SolveError> {
    let n = sum.dim();
    let scale = sum.exponent_spread().max(1e-12);
    let g = opts.grid_density.clamp(2, 24);
    // Critical points sit near Γ^(n); critical zeros near Γ^(n-1).
    let stratum = if mode == RootMode::Critical { n } else { n - 1 };
    let c_seed = (sum.len() as f64).ln() + 2.0;
    let axes: Vec<Vec<f64>> = windows
        .iter()
        .flat_map(|w| {
            let xs: Vec<f64> = (0..g).map(|i| w.x0 + (i as f64 + 0.5) * w.width() / g as f64).collect();
            let ys: Vec<f64> = (0..g).map(|i| w.y0 + (i as f64 + 0.5) * w.height() / g as f64).collect();
            [xs, ys]
        })
        .collect();
    let mut found: Vec<(Vec<Complex64>, f64)> = Vec::new();
    let total = axes.iter().map(|a| a.len()).product::<usize>();
    for idx in 0..total {
        let mut rem = idx;
        let mut coords = Vec::with_capacity(2 * n);
        for a in &axes {
            coords.push(a[rem % a.len()]);
            rem /= a.len();
        }
        let z: Vec<Complex64> = coords.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let loc = locate(sum, &z, c_seed)?;
        if !loc.in_u_c[stratum] {
            continue;
        }
        if let Some((r, res)) = newton_product(sum, &z, mode, 2.0 / scale) {
            let inside = r.iter().zip(windows).all(|(c, w)| w.expand(MERGE_RADIUS).contains(*c));
            let dup = found.iter().any(|(w, _)| crate::linalg::distance(w, &r) < MERGE_RADIUS);
            if inside && !dup {
                found.push((r, res));
            }
        }
    }
    found.sort_by(|a, b| {
        let ka: Vec<f64> = a.0.iter().flat_map(|c| [c.re, c.im]).collect();
        let kb: Vec<f64> = b.0.iter().flat_map(|c| [c.re, c.im]).collect();
        ka.partial_cmp(&kb).unwrap_or(core::cmp::Ordering::Equal)
    });
    let points = found
        .into_iter()
        .map(|(z, res)| {
            let near = z.iter().zip(windows).any(|(c, w)| w.inner_distance(*c) <= MERGE_RADIUS);
            Root { location: ComplexVec(z), multiplicity: 1, residual: res, near_boundary: near }
        })
        .collect();
    Ok(RootSet { points, mode, certified_count: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Zeros lie in `U_c(Γ)`.
    ZeroContainment,
    /// Lower bound of the normalised C¹ datum away from `U_{c1}(Γ^(n-1))`.
    C1Lower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub c_used: f64,
    pub c1: Option<f64>,
    /// Points where the bound fails.
    pub violations: Vec<ComplexVec>,
    /// Containment: smallest `c - gap_2` over roots (positive means inside).
    /// C¹ bound: the empirical lower bound itself.
    pub min_margin: f64,
    pub grid: (usize, usize),
    pub checked: usize,
    pub passed: bool,
}

/// Checks zero containment or the C¹ lower bound on a planar window.
pub fn verify_bounds(
    sum: &ExpSum,
    window: &Rect,
    kind: BoundKind,
    c: f64,
    c1: Option<f64>,
    grid: usize,
) -> Result<BoundReport, SolveError> {
    require_planar(sum)?;
    let l = sum.len().saturating_sub(1);
    match kind {
        BoundKind::ZeroContainment => {
            let log_l = if l == 0 { f64::NEG_INFINITY } else { (l as f64).ln() };
            if c <= log_l {
                return Err(SolveError::ConstantTooSmall { c, log_l });
            }
            let roots = find_planar_roots(sum, window, RootMode::Zeros, SolveOptions { grid_density: grid, seed: 0 })?;
            let mut violations = Vec::new();
            let mut min_margin = f64::INFINITY;
            for r in &roots.points {
                let loc = locate(sum, r.location.as_slice(), c)?;
                let dom = sum.dominance(r.location.as_slice(), c)?;
                let second = dom.gaps.get(1).map_or(f64::INFINITY, |g| g.1);
                min_margin = min_margin.min(c - second);
                if !loc.in_u_c[1] {
                    violations.push(r.location.clone());
                }
            }
            Ok(BoundReport {
                kind,
                c_used: c,
                c1: None,
                passed: violations.is_empty(),
                violations,
                min_margin,
                grid: (grid, grid),
                checked: roots.points.len(),
            })
        }
        BoundKind::C1Lower => {
            let c1v = c1.unwrap_or(c);
            let mut best = f64::INFINITY;
            let mut checked = 0;
            for z in window.grid(grid, grid) {
                let loc = locate(sum, &[z], c1v)?;
                if loc.in_u_c[0] {
                    continue;
                }
                checked += 1;
                best = best.min(sum.normalized_c1(&[z], &[z])?);
            }
            Ok(BoundReport {
                kind,
                c_used: c,
                c1: Some(c1v),
                violations: Vec::new(),
                min_margin: best,
                grid: (grid, grid),
                checked,
                passed: best > 0.0,
            })
        }
    }
}
