//! Euclidean Voronoi diagrams of planar sites, clipped to a window.
//!
//! Cells are built from the bisector halfplanes `|z - s_i| <= |z - s_j|`
//! directly, independently of any exponential sum.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{clip_halfplane, dedup_polygon, polygon_area, Rect};

#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiCell {
    pub site: usize,
    pub polygon: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiEdge {
    pub sites: (usize, usize),
    pub start: Complex64,
    pub end: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Voronoi {
    pub window: Rect,
    pub cells: Vec<VoronoiCell>,
    pub edges: Vec<VoronoiEdge>,
}

/// Voronoi cells and edges of `sites` inside `window`.
pub fn voronoi(sites: &[Complex64], window: &Rect) -> Voronoi {
    let mut cells = Vec::new();
    if window.is_empty() {
        return Voronoi { window: *window, cells, edges: Vec::new() };
    }
    let diam = window.diameter();
    let pos_tol = 1e-10 * diam;
    for (i, &si) in sites.iter().enumerate() {
        let mut poly = window.corners().to_vec();
        // Nearest sites first shrink the polygon fastest.
        let mut order: Vec<usize> = (0..sites.len()).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            (sites[a] - si).norm_sqr().partial_cmp(&(sites[b] - si).norm_sqr()).unwrap_or(core::cmp::Ordering::Equal)
        });
        for j in order {
            if poly.is_empty() {
                break;
            }
            let sj = sites[j];
            // 2 Re(conj(s_j - s_i) z) <= |s_j|² - |s_i|²
            let d = sj - si;
            let rhs = sj.norm_sqr() - si.norm_sqr();
            // Skip sites too far to cut the current polygon.
            let far = poly.iter().all(|p| (p - si).norm_sqr() <= (p - sj).norm_sqr());
            if far {
                continue;
            }
            poly = clip_halfplane(&poly, -2.0 * d.re, -2.0 * d.im, rhs, 0.0);
        }
        let poly = dedup_polygon(poly, pos_tol);
        if poly.len() >= 3 && polygon_area(&poly) > 1e-14 * window.area() {
            cells.push(VoronoiCell { site: i, polygon: poly });
        }
    }
    let boxes: Vec<Rect> = cells.iter().map(|c| Rect::bounding(&c.polygon)).collect();
    let mut edges = Vec::new();
    for a in 0..cells.len() {
        for b in a + 1..cells.len() {
            if !boxes[a].touches(&boxes[b], 1e3 * pos_tol) {
                continue;
            }
            let (i, j) = (cells[a].site, cells[b].site);
            if let Some((p, q)) = shared_segment(sites, i, j, window) {
                if (q - p).norm() > pos_tol {
                    edges.push(VoronoiEdge { sites: (i, j), start: p, end: q });
                }
            }
        }
    }
    Voronoi { window: *window, cells, edges }
}

/// The part of the bisector of `s_i, s_j` closer to them than to any other
/// site, inside `window`.
fn shared_segment(sites: &[Complex64], i: usize, j: usize, window: &Rect) -> Option<(Complex64, Complex64)> {
    let (si, sj) = (sites[i], sites[j]);
    let mid = 0.5 * (si + sj);
    let n = sj - si;
    let len = n.norm();
    if len == 0.0 {
        return None;
    }
    let dir = Complex64::new(-n.im, n.re) / len;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let tol = 1e-12 * (1.0 + window.diameter() * window.diameter());
    let mut cut = |h0: f64, h1: f64| -> bool {
        // h0 + h1 s >= 0
        if h1.abs() < 1e-300 {
            return h0 >= -tol;
        }
        let s = -h0 / h1;
        if h1 > 0.0 {
            lo = lo.max(s);
        } else {
            hi = hi.min(s);
        }
        true
    };
    for (k, &sk) in sites.iter().enumerate() {
        if k == i || k == j {
            continue;
        }
        // |z - s_k|² - |z - s_i|² = 2 Re(conj(s_i - s_k) z) + |s_k|² - |s_i|²
        let g = si - sk;
        let h0 = 2.0 * (g.conj() * mid).re + sk.norm_sqr() - si.norm_sqr();
        let h1 = 2.0 * (g.conj() * dir).re;
        if !cut(h0, h1) {
            return None;
        }
    }
    let ok = cut(mid.re - window.x0, dir.re)
        && cut(window.x1 - mid.re, -dir.re)
        && cut(mid.im - window.y0, dir.im)
        && cut(window.y1 - mid.im, -dir.im);
    if ok && hi > lo {
        Some((mid + dir * lo, mid + dir * hi))
    } else {
        None
    }
}
