//! The tropical skeleton of an exponential sum.
//!
//! For planar sums the real exponents `f_i(x, y) = Re α_i + Re(m_i) x - Im(m_i) y`
//! are affine, so the dominance regions are convex polygons and the skeleton is
//! a piecewise-linear graph which can be built exactly by halfplane clipping.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::expsum::{ExpSum, ExpSumError, TOL_TIE};
use crate::geometry::{clip_halfplane, dedup_polygon, polygon_area, segment_distance, Rect};
use crate::linalg::affine_rank;

/// Relative tolerance on singular values when measuring affine spans.
pub const SPAN_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SkeletonError {
    #[error("planar skeletons need a one-dimensional sum, got dimension {0}")]
    NotPlanar(usize),
    #[error(transparent)]
    Sum(#[from] ExpSumError),
}

/// Dominance region of one term, clipped to the window.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub term: usize,
    /// Counter-clockwise convex polygon.
    pub polygon: Vec<Complex64>,
    /// Whether the region continues past the window.
    pub clipped: bool,
}

/// A segment of the skeleton along which the terms in `active` tie.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub active: Vec<usize>,
    /// Non-empty cells adjacent to the edge.
    pub cells: Vec<usize>,
    pub start: Complex64,
    pub end: Complex64,
    /// Endpoints that were cut by the window rather than ending at a vertex.
    pub clipped_start: bool,
    pub clipped_end: bool,
}

impl Edge {
    pub fn is_generic(&self) -> bool {
        self.active.len() == 2
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: Complex64,
    pub active: Vec<usize>,
    /// Indices into [`Skeleton2D::edges`].
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton2D {
    pub window: Rect,
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    pub vertices: Vec<Vertex>,
}

impl Skeleton2D {
    /// True when every edge separates exactly two terms and every vertex is
    /// trivalent.
    pub fn is_generic(&self) -> bool {
        self.edges.iter().all(|e| e.is_generic() && e.cells.len() == 2)
            && self.vertices.iter().all(|v| v.active.len() == 3 && v.edges.len() == 3)
    }

    /// Euclidean distance from `z` to the drawn edges, `None` without edges.
    pub fn distance(&self, z: Complex64) -> Option<f64> {
        self.edges.iter().map(|e| segment_distance(z, e.start, e.end)).reduce(f64::min)
    }
}

/// Where a point sits with respect to the strata `Γ^(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumLocation {
    /// Lowest index attaining `b(z)`.
    pub region: usize,
    pub near_set: Vec<usize>,
    pub active_span_dim: usize,
    /// `2n - active_span_dim`.
    pub stratum_dim: usize,
    /// `in_u_c[k]` holds iff the point lies in `U_c(Γ^(k))`, for `k = 0..=2n`.
    pub in_u_c: Vec<bool>,
}

/// Affine coefficients of `f_i(x, y) = a + b x + c y`.
#[derive(Debug, Clone, Copy)]
struct Plane {
    a: f64,
    b: f64,
    c: f64,
}

impl Plane {
    fn of(sum: &ExpSum, i: usize) -> Plane {
        let m = sum.planar_exponent(i);
        Plane { a: sum.alpha(i).re, b: m.re, c: -m.im }
    }

    fn at(&self, z: Complex64) -> f64 {
        self.a + self.b * z.re + self.c * z.im
    }

    fn minus(&self, o: &Plane) -> Plane {
        Plane { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c }
    }
}

fn planes(sum: &ExpSum) -> Result<Vec<Plane>, SkeletonError> {
    if sum.dim() != 1 {
        return Err(SkeletonError::NotPlanar(sum.dim()));
    }
    Ok((0..sum.len()).map(|i| Plane::of(sum, i)).collect())
}

/// The part of the line `f_i = f_j` on which both terms dominate, as
/// `(base, direction, s_min, s_max)`; `None` when empty.
fn tie_interval(
    planes: &[Plane],
    i: usize,
    j: usize,
    window: Option<&Rect>,
    tol: f64,
) -> Option<(Complex64, Complex64, f64, f64)> {
    let g = planes[i].minus(&planes[j]);
    let gn2 = g.b * g.b + g.c * g.c;
    if gn2 == 0.0 {
        return None;
    }
    let gn = gn2.sqrt();
    let base = Complex64::new(-g.a * g.b / gn2, -g.a * g.c / gn2);
    let dir = Complex64::new(-g.c / gn, g.b / gn);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut constrain = |h0: f64, h1: f64| -> bool {
        // h0 + h1 s >= -tol
        let scale = 1.0 + h0.abs();
        if h1.abs() <= 1e-14 * scale {
            return h0 >= -tol;
        }
        // Parallel constraints keep the tie slack; the others are exact, so a
        // pair meeting only at a vertex does not grow a spurious sliver.
        let s = -h0 / h1;
        if h1 > 0.0 {
            lo = lo.max(s);
        } else {
            hi = hi.min(s);
        }
        true
    };
    for (k, pk) in planes.iter().enumerate() {
        if k == i || k == j {
            continue;
        }
        let h = planes[i].minus(pk);
        let h0 = h.at(base);
        let h1 = h.b * dir.re + h.c * dir.im;
        if !constrain(h0, h1) {
            return None;
        }
    }
    if let Some(w) = window {
        let ok = constrain(base.re - w.x0, dir.re)
            && constrain(w.x1 - base.re, -dir.re)
            && constrain(base.im - w.y0, dir.im)
            && constrain(w.y1 - base.im, -dir.im);
        if !ok {
            return None;
        }
    }
    if hi > lo {
        Some((base, dir, lo, hi))
    } else {
        None
    }
}

fn ties_at(planes: &[Plane], z: Complex64, tol: f64) -> Vec<usize> {
    let vals: Vec<f64> = planes.iter().map(|p| p.at(z)).collect();
    let b = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..vals.len()).filter(|&k| b - vals[k] <= tol).collect()
}

/// Scale-aware tie tolerance for real exponents on `window`.
fn tie_tolerance(planes: &[Plane], window: &Rect) -> f64 {
    let mut scale: f64 = 1.0;
    for p in planes {
        for c in window.corners() {
            scale = scale.max(p.at(c).abs());
        }
    }
    TOL_TIE * scale
}

/// Exact skeleton of a planar sum clipped to `window`.
pub fn build_skeleton_2d(sum: &ExpSum, window: &Rect) -> Result<Skeleton2D, SkeletonError> {
    let planes = planes(sum)?;
    let empty = Skeleton2D { window: *window, cells: vec![], edges: vec![], vertices: vec![] };
    if window.is_empty() {
        return Ok(empty);
    }
    let tol = tie_tolerance(&planes, window);
    let diam = window.diameter();
    let pos_tol = 1e-10 * diam;
    let area_tol = 1e-14 * window.area();
    let n = planes.len();

    let mut cells = Vec::new();
    for i in 0..n {
        let mut poly: Vec<Complex64> = window.corners().to_vec();
        for k in 0..n {
            if k == i || poly.is_empty() {
                continue;
            }
            let h = planes[i].minus(&planes[k]);
            poly = clip_halfplane(&poly, h.b, h.c, h.a, 0.0);
        }
        let poly = dedup_polygon(poly, pos_tol);
        if poly.len() >= 3 && polygon_area(&poly) > area_tol {
            let clipped = poly.iter().any(|p| window.inner_distance(*p).abs() <= pos_tol);
            cells.push(Cell { term: i, polygon: poly, clipped });
        }
    }
    let mut nonempty = vec![false; n];
    for c in &cells {
        nonempty[c.term] = true;
    }
    // Every edge separates two cells of positive area, so only pairs of
    // touching cells need a tie interval.
    let boxes: Vec<Rect> = cells.iter().map(|c| Rect::bounding(&c.polygon)).collect();
    let touch = 1e3 * pos_tol;
    let mut pairs = Vec::new();
    for a in 0..cells.len() {
        for b in a + 1..cells.len() {
            if boxes[a].touches(&boxes[b], touch) {
                pairs.push((cells[a].term, cells[b].term));
            }
        }
    }

    let mut edges: Vec<Edge> = Vec::new();
    for (i, j) in pairs {
        let Some((base, dir, lo, hi)) = tie_interval(&planes, i, j, Some(window), tol) else {
            continue;
        };
        if hi - lo <= pos_tol {
            continue;
        }
        let start = base + dir * lo;
        let end = base + dir * hi;
        let active = ties_at(&planes, 0.5 * (start + end), tol);
        let duplicate = edges.iter().any(|e| {
            e.active == active
                && (((e.start - start).norm() <= 1e3 * pos_tol && (e.end - end).norm() <= 1e3 * pos_tol)
                    || ((e.start - end).norm() <= 1e3 * pos_tol && (e.end - start).norm() <= 1e3 * pos_tol))
        });
        if duplicate {
            continue;
        }
        let adj: Vec<usize> = active.iter().copied().filter(|&t| nonempty[t]).collect();
        edges.push(Edge {
            active,
            cells: adj,
            start,
            end,
            clipped_start: window.inner_distance(start).abs() <= pos_tol,
            clipped_end: window.inner_distance(end).abs() <= pos_tol,
        });
    }

    let mut vertices: Vec<Vertex> = Vec::new();
    for (ei, e) in edges.iter().enumerate() {
        for (p, clipped) in [(e.start, e.clipped_start), (e.end, e.clipped_end)] {
            if clipped {
                continue;
            }
            match vertices.iter_mut().find(|v| (v.point - p).norm() <= 1e3 * pos_tol) {
                Some(v) => {
                    if !v.edges.contains(&ei) {
                        v.edges.push(ei);
                    }
                }
                None => vertices.push(Vertex { point: p, active: ties_at(&planes, p, tol), edges: vec![ei] }),
            }
        }
    }
    // A vertex needs three tied terms; anything else is a numerical artefact of
    // an edge ending exactly on a tie.
    vertices.retain(|v| v.active.len() >= 3);

    Ok(Skeleton2D { window: *window, cells, edges, vertices })
}

/// Locates `z` relative to the strata using the near set `I_{z,c}`.
pub fn locate(sum: &ExpSum, z: &[Complex64], c: f64) -> Result<StratumLocation, SkeletonError> {
    let dom = sum.dominance(z, c)?;
    let region = dom.argmax_set.first().copied().unwrap_or(0);
    let pts: Vec<&[Complex64]> = dom.near_set.iter().map(|&i| sum.exponent(i)).collect();
    let span = affine_rank(&pts, SPAN_REL_TOL);
    let two_n = 2 * sum.dim();
    let stratum_dim = two_n.saturating_sub(span);
    let in_u_c = (0..=two_n).map(|k| span + k >= two_n).collect();
    Ok(StratumLocation { region, near_set: dom.near_set, active_span_dim: span, stratum_dim, in_u_c })
}

/// Distance from `z` to the skeleton `Γ`.
///
/// Planar sums get the exact Euclidean distance to the (unbounded) edge set.
/// In higher dimension the result is the proxy
/// `min_j (f_i - f_j) / |m_i - m_j|` with `i` dominant, which is the distance
/// to the nearest bisector hyperplane.
pub fn skeleton_distance(sum: &ExpSum, z: &[Complex64]) -> Result<f64, SkeletonError> {
    if sum.dim() == 1 {
        let planes = planes(sum)?;
        let z = z[0];
        let mut best = f64::INFINITY;
        for i in 0..planes.len() {
            for j in i + 1..planes.len() {
                if let Some((base, dir, lo, hi)) = tie_interval(&planes, i, j, None, 0.0) {
                    let s = ((z - base) * dir.conj()).re.clamp(lo, hi);
                    best = best.min((z - (base + dir * s)).norm());
                }
            }
        }
        return Ok(best);
    }
    let dom = sum.dominance(z, 0.0)?;
    let i = dom.gaps[0].0;
    let fi = sum.exponent_at(i, z).re;
    let mut best = f64::INFINITY;
    for j in 0..sum.len() {
        if j == i {
            continue;
        }
        let gap = fi - sum.exponent_at(j, z).re;
        let norm = crate::linalg::distance(sum.exponent(i), sum.exponent(j));
        if norm > 0.0 {
            best = best.min(gap / norm);
        }
    }
    Ok(best)
}
