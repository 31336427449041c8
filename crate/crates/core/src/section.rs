//! Gaussian-net sections on flat ℂ.
//!
//! A peak section at `p` is the single exponential term
//! `e^{-k|p|²/4 + k conj(p) z/2}` against the Gaussian frame `e^{-k|z|²/4}`,
//! so a section over a net is one global exponential sum. Its real skeleton is
//! the Voronoi diagram of the net.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expsum::{ComplexVec, ExpSum, ExpSumError, ExpTerm};
use crate::genericity::{classify_sum, exponent_set_quality, find_shift, simplex_quality, GenericityError, Simplex, VolumeMode};
use crate::geometry::{segment_distance, Rect};
use crate::pencil::PencilSpec;
use crate::skeleton::{build_skeleton_2d, Skeleton2D, SkeletonError};
use crate::solve::{find_planar_roots, RootMode, SolveError, SolveOptions};
use crate::voronoi::voronoi;

/// Smallest Gaussian weight kept when replicating periodic nets.
pub const WEIGHT_FLOOR: f64 = 1e-300;

/// Retries allowed when choosing each surgery constant.
pub const SURGERY_RETRIES: usize = 50;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SectionError {
    #[error("epsilon {epsilon} must be positive and below the domain extent {extent}")]
    BadEpsilon { epsilon: f64, extent: f64 },
    #[error("c1 must lie in (0, 0.5), got {0}")]
    BadC1(f64),
    #[error("{amplitudes} amplitudes for {points} net points")]
    AmplitudeCount { amplitudes: usize, points: usize },
    #[error("amplitude {0} is not of unit modulus")]
    NonUnitAmplitude(usize),
    #[error("k must be positive and finite, got {0}")]
    BadK(f64),
    #[error("the net is empty")]
    EmptyNet,
    #[error("no net point within 2ε of the base point")]
    NoLocalTerms,
    #[error("skeleton and Voronoi cells disagree by {distance} (tolerance {tolerance})")]
    Inconsistent { distance: f64, tolerance: f64 },
    #[error("no surgery constant reached the margin after {tries} tries, best datum {best}")]
    SurgeryFailed { tries: usize, best: f64 },
    #[error(transparent)]
    Sum(#[from] ExpSumError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Genericity(#[from] GenericityError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// An ε-net in a box, optionally on the flat torus of that box.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub points: Vec<Complex64>,
    pub epsilon: f64,
    pub domain: Rect,
    pub periodic: bool,
    /// Worst simplex quality over simplices with edges at most `2ε`.
    pub delta: f64,
    /// Whether every point met the requested quality.
    pub target_met: bool,
    /// Largest distance from a cover-grid point to the net.
    pub cover_radius: f64,
}

impl Net {
    /// A net from given points; `delta` and `cover_radius` are measured.
    pub fn from_points(points: Vec<Complex64>, epsilon: f64, domain: Rect, periodic: bool) -> Result<Self, SectionError> {
        let mut net = Net { points, epsilon, domain, periodic, delta: 1.0, target_met: true, cover_radius: 0.0 };
        net.delta = net_quality(&net)?;
        net.cover_radius = cover_radius(&net, epsilon / 10.0);
        Ok(net)
    }

    /// Distance in the plane, or on the torus for periodic nets.
    pub fn distance(&self, a: Complex64, b: Complex64) -> f64 {
        torus_delta(a, b, &self.domain, self.periodic).norm()
    }

    /// The points together with their lattice images within `margin` of the
    /// domain, as `(position, net index)`.
    pub fn images(&self, margin: f64) -> Vec<(Complex64, usize)> {
        if !self.periodic {
            return self.points.iter().copied().zip(0..).collect();
        }
        let (w, h) = (self.domain.width(), self.domain.height());
        let reach = (margin / w.min(h)).ceil() as i64 + 1;
        let grown = self.domain.expand(margin);
        let mut out = Vec::new();
        for (j, &p) in self.points.iter().enumerate() {
            for a in -reach..=reach {
                for b in -reach..=reach {
                    let q = p + Complex64::new(a as f64 * w, b as f64 * h);
                    if grown.contains(q) {
                        out.push((q, j));
                    }
                }
            }
        }
        out
    }
}

fn torus_delta(a: Complex64, b: Complex64, domain: &Rect, periodic: bool) -> Complex64 {
    let mut d = a - b;
    if periodic {
        let (w, h) = (domain.width(), domain.height());
        d.re -= w * (d.re / w).round();
        d.im -= h * (d.im / h).round();
    }
    d
}

/// Parameters of [`generic_net`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetParams {
    pub epsilon: f64,
    pub c1: f64,
    pub c2_target: f64,
    pub periodic: bool,
    pub seed: u64,
    pub max_tries: usize,
}

impl NetParams {
    pub fn new(epsilon: f64) -> Self {
        NetParams { epsilon, c1: 0.2, c2_target: 0.05, periodic: false, seed: 0, max_tries: 200 }
    }
}

/// Cover grid of the domain at spacing at most `h`.
fn cover_grid(domain: &Rect, h: f64, periodic: bool) -> Vec<Complex64> {
    let nx = (domain.width() / h).ceil().max(1.0) as usize;
    let ny = (domain.height() / h).ceil().max(1.0) as usize;
    let (ex, ey) = if periodic { (nx, ny) } else { (nx + 1, ny + 1) };
    let mut out = Vec::with_capacity(ex * ey);
    for j in 0..ey {
        for i in 0..ex {
            out.push(Complex64::new(
                domain.x0 + domain.width() * i as f64 / nx as f64,
                domain.y0 + domain.height() * j as f64 / ny as f64,
            ));
        }
    }
    out
}

fn cover_radius(net: &Net, h: f64) -> f64 {
    cover_grid(&net.domain, h, net.periodic)
        .iter()
        .map(|&g| net.points.iter().map(|&p| net.distance(g, p)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Worst quality of the simplices through `q` whose other vertices are
/// points within `2ε` of it.
fn local_quality(q: Complex64, neighbours: &[Complex64], reach: f64) -> Result<f64, SectionError> {
    let near: Vec<Complex64> = neighbours.iter().copied().filter(|p| (p - q).norm() <= reach).collect();
    let mut worst: f64 = 1.0;
    for (a, &pa) in near.iter().enumerate() {
        let pair = Simplex::planar(&[q, pa])?;
        worst = worst.min(simplex_quality(&pair, VolumeMode::Complexified, None)?);
        for &pb in &near[a + 1..] {
            if (pa - pb).norm() > reach {
                continue;
            }
            let tri = Simplex::planar(&[q, pa, pb])?;
            worst = worst.min(simplex_quality(&tri, VolumeMode::Real, None)?);
        }
    }
    Ok(worst)
}

fn net_quality(net: &Net) -> Result<f64, SectionError> {
    let reach = 2.0 * net.epsilon;
    let pts: Vec<ComplexVec> = net.images(reach).into_iter().map(|(p, _)| ComplexVec(vec![p])).collect();
    if pts.len() < 2 {
        return Ok(1.0);
    }
    Ok(exponent_set_quality(&pts, 1, Some(reach))?.delta_set)
}

/// Greedy ε-net whose points are rejection-sampled for simplex quality.
///
/// Each new point is drawn within `c1·ε` of a random uncovered grid point and
/// accepted once every simplex it forms with points within `2ε` has quality
/// at least `c2_target`. After `max_tries` draws the best draw is kept and the
/// net is flagged.
pub fn generic_net(domain: &Rect, params: &NetParams) -> Result<Net, SectionError> {
    let eps = params.epsilon;
    let extent = domain.width().min(domain.height());
    if !(eps > 0.0 && eps < extent) {
        return Err(SectionError::BadEpsilon { epsilon: eps, extent });
    }
    if !(params.c1 > 0.0 && params.c1 < 0.5) {
        return Err(SectionError::BadC1(params.c1));
    }
    let periodic = params.periodic;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let grid = cover_grid(domain, eps / 10.0, periodic);
    // Every point of the domain is within half a grid diagonal of the grid.
    let half_diag = 0.5 * (domain.width() / (domain.width() / (eps / 10.0)).ceil())
        .hypot(domain.height() / (domain.height() / (eps / 10.0)).ceil());
    let cover = eps - half_diag;
    let mut covered = vec![false; grid.len()];
    let mut net = Net {
        points: Vec::new(),
        epsilon: eps,
        domain: *domain,
        periodic,
        delta: 1.0,
        target_met: true,
        cover_radius: 0.0,
    };
    let reach = 2.0 * eps;
    loop {
        let uncovered: Vec<usize> = (0..grid.len()).filter(|&g| !covered[g]).collect();
        if uncovered.is_empty() {
            break;
        }
        let anchor = grid[uncovered[rng.random_range(0..uncovered.len())]];
        let mut best: Option<(f64, Complex64)> = None;
        let mut accepted = None;
        for _ in 0..params.max_tries.max(1) {
            let q = loop {
                let (u, v): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                if u * u + v * v <= 1.0 {
                    break anchor + Complex64::new(u, v) * (params.c1 * eps);
                }
            };
            let q = if periodic {
                let w = torus_delta(q, domain.center(), domain, true);
                domain.center() + w
            } else if domain.contains(q) {
                q
            } else {
                continue;
            };
            let neighbours: Vec<Complex64> = net
                .images(reach)
                .into_iter()
                .map(|(p, _)| q + torus_delta(p, q, domain, periodic))
                .collect();
            if neighbours.iter().any(|p| (p - q).norm() < (1.0 - params.c1) * eps) {
                continue;
            }
            let quality = local_quality(q, &neighbours, reach)?;
            if quality >= params.c2_target {
                accepted = Some(q);
                break;
            }
            if best.map_or(true, |(b, _)| quality > b) {
                best = Some((quality, q));
            }
        }
        let q = match (accepted, best) {
            (Some(q), _) => q,
            (None, Some((_, q))) => {
                net.target_met = false;
                q
            }
            // Every draw fell outside the domain: take the anchor itself.
            (None, None) => {
                net.target_met = false;
                anchor
            }
        };
        for (g, c) in grid.iter().zip(covered.iter_mut()) {
            if !*c && torus_delta(*g, q, domain, periodic).norm() <= cover {
                *c = true;
            }
        }
        net.points.push(q);
    }
    net.delta = net_quality(&net)?;
    net.cover_radius = cover_radius(&net, eps / 10.0);
    Ok(net)
}

/// A section `Σ a_j σ_{p_j}` as an exponential sum in the global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionSpec {
    pub net: Net,
    pub amplitudes: Vec<Complex64>,
    pub k: f64,
    /// Translates farther than this from the domain have weight below
    /// [`WEIGHT_FLOOR`] on it.
    pub cutoff_radius: f64,
    /// One term per (replicated) site: `α = log a - k|p|²/4`, exponent
    /// `k conj(p)/2`.
    pub global_sum: ExpSum,
    pub sites: Vec<Complex64>,
    /// Net index of each site.
    pub site_index: Vec<usize>,
    /// `kε² < 4`: the Gaussian tails are not small at the net scale.
    pub low_k: bool,
}

impl SectionSpec {
    /// Rescaling factor `εk` of the local metric.
    pub fn scale(&self) -> f64 {
        self.net.epsilon * self.k
    }

    /// `|s(z)| = e^{-k|z|²/4} |μ(z)|`.
    pub fn section_modulus(&self, z: Complex64) -> f64 {
        let j = self.global_sum.planar_jet(z);
        (j.log_scale - self.k * z.norm_sqr() / 4.0).exp() * j.value.norm()
    }
}

/// Assembles the global sum of a unit-amplitude section.
pub fn build_section(net: &Net, amplitudes: &[Complex64], k: f64) -> Result<SectionSpec, SectionError> {
    if net.points.is_empty() {
        return Err(SectionError::EmptyNet);
    }
    if amplitudes.len() != net.points.len() {
        return Err(SectionError::AmplitudeCount { amplitudes: amplitudes.len(), points: net.points.len() });
    }
    if let Some(j) = amplitudes.iter().position(|a| (a.norm() - 1.0).abs() > 1e-9) {
        return Err(SectionError::NonUnitAmplitude(j));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(SectionError::BadK(k));
    }
    let cutoff_radius = (4.0 * (1.0 / WEIGHT_FLOOR).ln() / k).sqrt();
    let (sites, site_index): (Vec<Complex64>, Vec<usize>) = if net.periodic {
        net.images(cutoff_radius).into_iter().unzip()
    } else {
        (net.points.clone(), (0..net.points.len()).collect())
    };
    let terms: Vec<ExpTerm> = sites
        .iter()
        .zip(&site_index)
        .map(|(&s, &j)| {
            let alpha = Complex64::new(-k * s.norm_sqr() / 4.0, amplitudes[j].arg());
            ExpTerm::planar(alpha, s.conj() * (k / 2.0))
        })
        .collect();
    let global_sum = ExpSum::new(1, terms)?;
    Ok(SectionSpec {
        net: net.clone(),
        amplitudes: amplitudes.to_vec(),
        k,
        cutoff_radius,
        global_sum,
        sites,
        site_index,
        low_k: k * net.epsilon * net.epsilon < 4.0,
    })
}

/// Unit amplitudes with independent uniform phases.
pub fn random_amplitudes(count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))).collect()
}

/// Directed Hausdorff distance from the boundary of `a` to that of `b`,
/// sampled at vertices and edge midpoints.
fn boundary_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    let dist = |z: Complex64| {
        (0..b.len()).map(|i| segment_distance(z, b[i], b[(i + 1) % b.len()])).fold(f64::INFINITY, f64::min)
    };
    (0..a.len())
        .flat_map(|i| [a[i], 0.5 * (a[i] + a[(i + 1) % a.len()])])
        .map(dist)
        .fold(0.0, f64::max)
}

/// Skeleton of the global sum in `window`, cross-checked cell by cell against
/// the Voronoi diagram of the sites. Term indices refer to `global_sum`.
pub fn section_skeleton(spec: &SectionSpec, window: &Rect) -> Result<Skeleton2D, SectionError> {
    let (pruned, keep) = spec.global_sum.prune_planar(window.x0, window.y0, window.x1, window.y1);
    let mut sk = build_skeleton_2d(&pruned, window)?;
    for c in &mut sk.cells {
        c.term = keep[c.term];
    }
    for e in &mut sk.edges {
        e.active.iter_mut().chain(e.cells.iter_mut()).for_each(|t| *t = keep[*t]);
    }
    for v in &mut sk.vertices {
        v.active.iter_mut().for_each(|t| *t = keep[*t]);
    }
    let sites: Vec<Complex64> = keep.iter().map(|&i| spec.sites[i]).collect();
    let vor = voronoi(&sites, window);
    let tolerance = 1e-8 * window.diameter();
    let mut distance: f64 = 0.0;
    if vor.cells.len() != sk.cells.len() {
        distance = f64::INFINITY;
    }
    for vc in &vor.cells {
        let term = keep[vc.site];
        match sk.cells.iter().find(|c| c.term == term) {
            Some(c) => {
                distance = distance
                    .max(boundary_gap(&vc.polygon, &c.polygon))
                    .max(boundary_gap(&c.polygon, &vc.polygon));
            }
            None => distance = f64::INFINITY,
        }
    }
    if distance > tolerance {
        return Err(SectionError::Inconsistent { distance, tolerance });
    }
    Ok(sk)
}

/// The section near `p` in the rescaled coordinate `ζ = εk (z - p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    pub base: Complex64,
    /// `μ°_p`: the terms of the sites within `2ε`, shifted when requested.
    pub model: ExpSum,
    /// Site indices of the model terms.
    pub members: Vec<usize>,
    /// `m_*` if a shift was applied.
    pub shift: Option<Complex64>,
    /// Grid supremum over `|ζ| <= 3` of the normalised C¹ size of the tail.
    pub error_sup: f64,
}

/// `α_i` of the recentred, rescaled sum at `p`, for every site.
fn local_alphas(spec: &SectionSpec, p: Complex64) -> Vec<Complex64> {
    spec.sites
        .iter()
        .zip(&spec.site_index)
        .map(|(&s, &j)| {
            let phase = spec.amplitudes[j].arg() + spec.k * (s.conj() * p).im / 2.0;
            Complex64::new(-spec.k * (s - p).norm_sqr() / 4.0, phase)
        })
        .collect()
}

fn local_exponent(spec: &SectionSpec, s: Complex64, p: Complex64) -> Complex64 {
    (s - p).conj() / (2.0 * spec.net.epsilon)
}

/// Local model at `p`. With `apply_shift`, the exponents are shifted by a
/// point found by [`find_shift`] so that the model is strictly basic.
pub fn local_model(spec: &SectionSpec, p: Complex64, apply_shift: bool) -> Result<LocalModel, SectionError> {
    let eps = spec.net.epsilon;
    let alphas = local_alphas(spec, p);
    let members: Vec<usize> = (0..spec.sites.len()).filter(|&i| (spec.sites[i] - p).norm() <= 2.0 * eps).collect();
    if members.is_empty() {
        return Err(SectionError::NoLocalTerms);
    }
    let terms: Vec<ExpTerm> =
        members.iter().map(|&i| ExpTerm::planar(alphas[i], local_exponent(spec, spec.sites[i], p))).collect();
    let mut model = ExpSum::new(1, terms)?;
    let mut shift = None;
    if apply_shift {
        let class = classify_sum(&model, Some(&Rect::centered(3.0)))?;
        let found = find_shift(&model, &class.catalog, &ComplexVec::zeros(1), 0.5, 0.05, 0, 500)?;
        model = model.transform(Some(found.shift.as_slice()), None)?;
        shift = Some(found.shift.0[0]);
    }
    // b(0) of the full local sum is the largest real part.
    let b0 = alphas.iter().map(|a| a.re).fold(f64::NEG_INFINITY, f64::max);
    let tail: Vec<usize> = (0..spec.sites.len()).filter(|i| members.binary_search(i).is_err()).collect();
    let mut error_sup: f64 = 0.0;
    if !tail.is_empty() {
        let n = 41;
        for zeta in Rect::centered(3.0).grid(n, n).filter(|z| z.norm() <= 3.0) {
            let mut value = Complex64::new(0.0, 0.0);
            let mut deriv = Complex64::new(0.0, 0.0);
            for &i in &tail {
                let m = local_exponent(spec, spec.sites[i], p);
                let w = (alphas[i] + m * zeta - b0).exp();
                value += w;
                deriv += m * w;
            }
            error_sup = error_sup.max(value.norm() + deriv.norm());
        }
    }
    Ok(LocalModel { base: p, model, members, shift, error_sup })
}

/// Field values relative to `e^{b(z)}` of the global sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldJet {
    pub log_scale: f64,
    pub value: Complex64,
    pub dz: Complex64,
    pub dzbar: Complex64,
}

impl FieldJet {
    /// Normalised C¹ size in the rescaled metric at the evaluation point.
    pub fn c1_datum(&self, z: Complex64, k: f64, scale: f64) -> f64 {
        let frame = self.value * (z.conj() * (k / 2.0));
        self.value.norm() + ((self.dz - frame).norm() + self.dzbar.norm()) / scale
    }
}

/// Sum over `sites` (or a subset) evaluated relative to `b`.
struct Evaluation {
    log_scale: f64,
    value: Complex64,
    dz: Complex64,
}

fn evaluate_terms<I: Iterator<Item = usize>>(sum: &ExpSum, z: Complex64, b: f64, idx: I) -> Evaluation {
    let mut value = Complex64::new(0.0, 0.0);
    let mut dz = Complex64::new(0.0, 0.0);
    for i in idx {
        let m = sum.planar_exponent(i);
        let e = sum.alpha(i) + m * z - b;
        if e.re < -crate::expsum::NEGLIGIBLE_GAP {
            continue;
        }
        let w = e.exp();
        value += w;
        dz += m * w;
    }
    Evaluation { log_scale: b, value, dz }
}

fn max_real(sum: &ExpSum, z: Complex64) -> f64 {
    (0..sum.len()).map(|i| (sum.alpha(i) + sum.planar_exponent(i) * z).re).fold(f64::NEG_INFINITY, f64::max)
}

/// The section `s` itself.
pub fn base_jet(spec: &SectionSpec, z: Complex64) -> FieldJet {
    let sum = &spec.global_sum;
    let ev = evaluate_terms(sum, z, max_real(sum, z), 0..sum.len());
    FieldJet { log_scale: ev.log_scale, value: ev.value, dz: ev.dz, dzbar: Complex64::new(0.0, 0.0) }
}

/// A near-critical cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Grid point with the smallest datum.
    pub center: Complex64,
    /// Critical points of the local model near the hits (`γ°`).
    pub members: Vec<Complex64>,
    pub hits: usize,
    pub min_datum: f64,
    /// Formed by merging clusters whose `3R₁` balls met.
    pub merged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub c3: f64,
    pub c4: f64,
    pub r1: f64,
    /// `εk`.
    pub scale: f64,
    pub grid_points: usize,
}

impl ClusterSet {
    /// Rescaled distance from `z` to the nearest member of cluster `i`.
    pub fn distance(&self, i: usize, z: Complex64) -> f64 {
        self.clusters[i].members.iter().map(|m| (z - m).norm()).fold(f64::INFINITY, f64::min) * self.scale
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Scans the domain for points where the normalised C¹ datum of `s` drops
/// below `c3`, groups hits closer than `8R₁` (rescaled) and locates the
/// critical points of the local model of each group.
pub fn detect_clusters(spec: &SectionSpec, c3: f64, r1: f64, grid_density: usize) -> Result<ClusterSet, SectionError> {
    let scale = spec.scale();
    let mut set = ClusterSet { clusters: Vec::new(), c3, c4: 0.05 * c3, r1, scale, grid_points: 0 };
    if !(c3 > 0.0) {
        return Ok(set);
    }
    let domain = spec.net.domain;
    let (pruned, _) = spec.global_sum.prune_planar(domain.x0, domain.y0, domain.x1, domain.y1);
    let pruned_spec = SectionSpec { global_sum: pruned, ..spec.clone() };
    let h = 1.0 / (grid_density.max(1) as f64 * scale);
    let nx = (domain.width() / h).ceil() as usize;
    let ny = (domain.height() / h).ceil() as usize;
    set.grid_points = nx * ny;
    let mut hits: Vec<(Complex64, f64)> = Vec::new();
    for z in domain.grid(nx, ny) {
        let d = base_jet(&pruned_spec, z).c1_datum(z, spec.k, scale);
        if d < c3 {
            hits.push((z, d));
        }
    }
    if hits.is_empty() {
        return Ok(set);
    }
    let link = 8.0 * r1 / scale;
    hits.sort_by(|a, b| a.0.re.partial_cmp(&b.0.re).unwrap_or(core::cmp::Ordering::Equal));
    let mut parent: Vec<usize> = (0..hits.len()).collect();
    for i in 0..hits.len() {
        for j in i + 1..hits.len() {
            if hits[j].0.re - hits[i].0.re > link {
                break;
            }
            if (hits[j].0 - hits[i].0).norm() < link {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_group: Vec<Option<usize>> = vec![None; hits.len()];
    for i in 0..hits.len() {
        let r = find(&mut parent, i);
        match root_group[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_group[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    for g in groups {
        let pts: Vec<Complex64> = g.iter().map(|&i| hits[i].0).collect();
        let (center, min_datum) = g
            .iter()
            .map(|&i| hits[i])
            .fold((hits[g[0]].0, f64::INFINITY), |acc, h| if h.1 < acc.1 { h } else { acc });
        let members = cluster_critical_points(spec, center, &pts, r1).unwrap_or_else(|| vec![center]);
        set.clusters.push(Cluster { center, members, hits: g.len(), min_datum, merged: false });
    }
    merge_overlapping(&mut set);
    Ok(set)
}

/// Critical points of the local model at `center` in the box around `pts`.
fn cluster_critical_points(spec: &SectionSpec, center: Complex64, pts: &[Complex64], r1: f64) -> Option<Vec<Complex64>> {
    let scale = spec.scale();
    let lm = local_model(spec, center, false).ok()?;
    let deriv = lm.model.derivative(0)?;
    let to_zeta = |z: Complex64| (z - center) * scale;
    let mut b = Rect::bounding(&pts.iter().map(|&z| to_zeta(z)).collect::<Vec<_>>()).expand(r1);
    // Nudge the box off any lattice-aligned critical point.
    b = Rect::new(b.x0 - 0.0137 * r1, b.y0 - 0.0091 * r1, b.x1 + 0.0113 * r1, b.y1 + 0.0071 * r1);
    let roots = find_planar_roots(&deriv, &b, RootMode::Zeros, SolveOptions::default()).ok()?;
    let members: Vec<Complex64> = roots.points.iter().map(|r| center + r.location.0[0] / scale).collect();
    if members.is_empty() {
        None
    } else {
        Some(members)
    }
}

fn merge_overlapping(set: &mut ClusterSet) {
    loop {
        let mut pair = None;
        'outer: for i in 0..set.clusters.len() {
            for j in i + 1..set.clusters.len() {
                let close = set.clusters[i]
                    .members
                    .iter()
                    .any(|a| set.clusters[j].members.iter().any(|b| (a - b).norm() * set.scale < 6.0 * set.r1));
                if close {
                    pair = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((i, j)) = pair else { break };
        let other = set.clusters.remove(j);
        let c = &mut set.clusters[i];
        if other.min_datum < c.min_datum {
            c.center = other.center;
            c.min_datum = other.min_datum;
        }
        c.members.extend(other.members);
        c.hits += other.hits;
        c.merged = true;
    }
}

/// `1` below `a`, `0` above `b`, smooth in between; returns the value and
/// its derivative.
fn transition(r: f64, a: f64, b: f64) -> (f64, f64) {
    if r <= a {
        return (1.0, 0.0);
    }
    if r >= b {
        return (0.0, 0.0);
    }
    let w = b - a;
    let (u, v) = ((b - r) / w, (r - a) / w);
    let (gu, gv) = ((-1.0 / u).exp(), (-1.0 / v).exp());
    // d/dr of g(u) with du/dr = -1/w, g'(x) = g(x)/x².
    let dgu = -gu / (u * u) / w;
    let dgv = gv / (v * v) / w;
    let s = gu + gv;
    (gu / s, (dgu * s - gu * (dgu + dgv)) / (s * s))
}

/// Surgery data around one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SurgeryCluster {
    pub center: Complex64,
    pub members: Vec<Complex64>,
    /// Sites kept by the local model.
    pub local_sites: Vec<usize>,
    pub shift: Complex64,
    /// `ε̂`.
    pub epsilon_hat: Complex64,
    /// Worst datum of `ŝ` over the ball on the check grid.
    pub margin: f64,
    pub tries: usize,
    /// `e^{c + n z}` is the added term before scaling by `ε̂`.
    bump_exponent: Complex64,
    bump_alpha: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surgery {
    pub clusters: Vec<SurgeryCluster>,
    pub r1: f64,
    pub c3: f64,
    pub c4: f64,
    pub scale: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Base,
    Tilde,
    Hat,
}

impl Surgery {
    /// Whether `z` lies in some closed `3R₁` ball, where the fields may differ.
    pub fn in_support(&self, z: Complex64) -> bool {
        (0..self.clusters.len()).any(|i| self.rescaled_distance(i, z) < 3.0 * self.r1)
    }

    fn rescaled_distance(&self, i: usize, z: Complex64) -> f64 {
        self.nearest(i, z).1
    }

    fn nearest(&self, i: usize, z: Complex64) -> (Complex64, f64) {
        self.clusters[i]
            .members
            .iter()
            .map(|&m| (m, (z - m).norm() * self.scale))
            .fold((Complex64::new(0.0, 0.0), f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    /// `s`, `s̃` or `ŝ` at `z`.
    pub fn eval(&self, spec: &SectionSpec, field: Field, z: Complex64) -> FieldJet {
        let base = base_jet(spec, z);
        if field == Field::Base {
            return base;
        }
        let Some(i) = (0..self.clusters.len()).find(|&i| self.rescaled_distance(i, z) < 3.0 * self.r1) else {
            return base;
        };
        let c = &self.clusters[i];
        let (nearest, r) = self.nearest(i, z);
        // ∂r/∂z for r = εk|z - c|; ∂r/∂z̄ is its conjugate.
        let dr = if r > 0.0 { (z - nearest).conj() * (self.scale * self.scale / (2.0 * r)) } else { Complex64::new(0.0, 0.0) };
        let sum = &spec.global_sum;
        let b = base.log_scale;
        let tail = evaluate_terms(sum, z, b, (0..sum.len()).filter(|j| c.local_sites.binary_search(j).is_err()));
        let (rho, drho) = transition(r, 2.0 * self.r1, 3.0 * self.r1);
        let mut out = FieldJet {
            log_scale: b,
            value: base.value - tail.value * rho,
            dz: base.dz - tail.dz * rho - tail.value * dr * drho,
            dzbar: -tail.value * dr.conj() * drho,
        };
        if field == Field::Hat {
            let (rho, drho) = transition(r, self.r1, 2.0 * self.r1);
            let e = (c.bump_alpha + c.bump_exponent * z - b).exp() * c.epsilon_hat;
            out.value += e * rho;
            out.dz += e * c.bump_exponent * rho + e * dr * drho;
            out.dzbar += e * dr.conj() * drho;
        }
        out
    }

    pub fn c1_datum(&self, spec: &SectionSpec, field: Field, z: Complex64) -> f64 {
        self.eval(spec, field, z).c1_datum(z, self.k, self.scale)
    }

    /// Points of a grid with rescaled spacing `step` inside the `radius` ball of
    /// cluster `i`.
    pub fn ball_grid(&self, i: usize, radius: f64, step: f64) -> Vec<Complex64> {
        let h = step / self.scale;
        let reach = radius / self.scale;
        let mut out = Vec::new();
        for &m in &self.clusters[i].members {
            let n = (reach / h).ceil() as i64;
            for a in -n..=n {
                for b in -n..=n {
                    let z = m + Complex64::new(a as f64 * h, b as f64 * h);
                    if self.rescaled_distance(i, z) <= radius && !out.contains(&z) {
                        out.push(z);
                    }
                }
            }
        }
        out
    }
}

/// Replaces `s` by its local model near each cluster and adds a small
/// constant there: `ε̂` has modulus `0.1·C₃` and a random phase, redrawn until
/// the datum of `ŝ` on the cluster ball is at least `C₄ = 0.05·C₃`.
pub fn perturb_section(spec: &SectionSpec, clusters: &ClusterSet, seed: u64) -> Result<Surgery, SectionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.k;
    let scale = spec.scale();
    let mut surgery =
        Surgery { clusters: Vec::new(), r1: clusters.r1, c3: clusters.c3, c4: clusters.c4, scale, k };
    for cl in &clusters.clusters {
        let q = cl.center;
        let lm = local_model(spec, q, false)?;
        let shift = match classify_sum(&lm.model, Some(&Rect::centered(3.0))) {
            Ok(class) => find_shift(&lm.model, &class.catalog, &ComplexVec::zeros(1), 0.5, 0.05, seed, 500)
                .map(|s| s.shift.0[0])
                .unwrap_or(Complex64::new(0.0, 0.0)),
            Err(_) => Complex64::new(0.0, 0.0),
        };
        let b_local = -k * spec.sites.iter().map(|s| (s - q).norm_sqr()).fold(f64::INFINITY, f64::min) / 4.0;
        let bump_exponent = q.conj() * (k / 2.0) + shift * scale;
        // `e^{b_q} e^{m_* εk (z - q)} σ_q/σ_0`, so that `|E(q)| = e^{b(q)}`.
        let bump_alpha = Complex64::new(b_local - k * q.norm_sqr() / 4.0, 0.0) - shift * scale * q;
        surgery.clusters.push(SurgeryCluster {
            center: q,
            members: cl.members.clone(),
            local_sites: lm.members.clone(),
            shift,
            epsilon_hat: Complex64::new(0.0, 0.0),
            margin: 0.0,
            tries: 0,
            bump_exponent,
            bump_alpha,
        });
        let i = surgery.clusters.len() - 1;
        let grid = surgery.ball_grid(i, 3.0 * clusters.r1, clusters.r1 / 8.0);
        let mut best = f64::NEG_INFINITY;
        let mut done = false;
        for t in 1..=SURGERY_RETRIES {
            let phase = rng.random_range(0.0..2.0 * PI);
            let eps_hat = Complex64::from_polar(0.1 * clusters.c3, phase);
            surgery.clusters[i].epsilon_hat = eps_hat;
            let margin = grid.iter().map(|&z| surgery.c1_datum(spec, Field::Hat, z)).fold(f64::INFINITY, f64::min);
            best = best.max(margin);
            surgery.clusters[i].tries = t;
            surgery.clusters[i].margin = margin;
            if margin >= clusters.c4 {
                done = true;
                break;
            }
        }
        if !done {
            return Err(SectionError::SurgeryFailed { tries: SURGERY_RETRIES, best });
        }
    }
    Ok(surgery)
}

/// Groups of net points, no two Voronoi neighbours sharing a group.
#[derive(Debug, Clone, PartialEq)]
pub struct Coloring {
    /// Group of each net point.
    pub color: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
    pub count: usize,
    /// Voronoi adjacency of the net points.
    pub adjacency: Vec<Vec<usize>>,
}

/// Voronoi adjacency of the net points (through lattice images when
/// periodic).
pub fn net_adjacency(net: &Net) -> Vec<Vec<usize>> {
    let n = net.points.len();
    let (sites, index, window): (Vec<Complex64>, Vec<usize>, Rect) = if net.periodic {
        let imgs = net.images(3.0 * net.epsilon);
        let (s, i) = imgs.into_iter().unzip();
        (s, i, net.domain.expand(net.epsilon))
    } else {
        let b = Rect::bounding(&net.points);
        let pad = 10.0 * b.diameter() + 1.0;
        (net.points.clone(), (0..n).collect(), b.expand(pad))
    };
    let vor = voronoi(&sites, &window);
    let mut adj = vec![Vec::new(); n];
    for e in &vor.edges {
        let (a, b) = (index[e.sites.0], index[e.sites.1]);
        if a != b {
            if !adj[a].contains(&b) {
                adj[a].push(b);
            }
            if !adj[b].contains(&a) {
                adj[b].push(a);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
    }
    adj
}

/// Greedy colouring by decreasing degree, then the section pencil with
/// `a_∞ = a` and `a_0 = -a ζ_j` on group `j`.
pub fn color_and_pencil(spec: &SectionSpec) -> (Coloring, PencilSpec) {
    let adjacency = net_adjacency(&spec.net);
    let n = adjacency.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| adjacency[b].len().cmp(&adjacency[a].len()).then(a.cmp(&b)));
    let mut color = vec![usize::MAX; n];
    for &v in &order {
        let used: Vec<usize> = adjacency[v].iter().map(|&u| color[u]).collect();
        color[v] = (0..).find(|c| !used.contains(c)).unwrap_or(0);
    }
    let count = color.iter().copied().max().map_or(0, |c| c + 1);
    let mut groups = vec![Vec::new(); count];
    for (v, &c) in color.iter().enumerate() {
        groups[c].push(v);
    }
    let sum = &spec.global_sum;
    let exponents = (0..sum.len()).map(|i| sum.planar_exponent(i)).collect();
    let group = spec.site_index.iter().map(|&j| color[j]).collect();
    let pencil = PencilSpec::colored(exponents, sum.alphas().to_vec(), group, count);
    (Coloring { color, groups, count, adjacency }, pencil)
}
