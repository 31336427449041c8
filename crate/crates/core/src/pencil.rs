//! Real pencils `μ_t = μ_0 + t μ_∞` of planar exponential sums.
//!
//! Both ends share their exponents and have coefficients of equal modulus, so
//! the coefficient of term `j` is `e^{α_∞j}(t + ρ_j)` with `|ρ_j| = 1`. The
//! parameter sphere is modelled by a tree: a root for `t` away from every
//! `-ρ_j`, and one leg per `j` whose coordinate `τ <= 0` records how close `t`
//! is to `-ρ_j`. The real-coefficient sum along the tree gives the skeletons
//! that control the fibres.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::expsum::{log_add, ExpSum, ExpSumError, ExpTerm, TINY_COEFFICIENT};
use crate::geometry::Rect;
use crate::skeleton::{build_skeleton_2d, locate, skeleton_distance, SkeletonError};
use crate::solve::{count_winding, find_planar_roots, Contour, RootMode, SolveError, SolveOptions, WindingTarget};

/// Stand-in for `τ = -∞` (the leg end where a coefficient vanishes).
pub const TAU_SENTINEL: f64 = -1e308;

/// Cancellation below this relative size counts as an exact zero.
const RELATIVE_CANCELLATION: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PencilError {
    #[error("pencil ends need matching term counts ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("term {0}: |e^alpha0| and |e^alphainf| differ")]
    UnequalModuli(usize),
    #[error("every coefficient of the fibre vanishes")]
    AllCoefficientsVanish,
    #[error("the Wronskian vanishes identically")]
    DegenerateWronskian,
    #[error("pencil singular sets are computed for planar sums only")]
    NotPlanar,
    #[error(transparent)]
    Sum(#[from] ExpSumError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtendedComplex {
    pub fn finite(re: f64, im: f64) -> Self {
        ExtendedComplex::Finite(Complex64::new(re, im))
    }

    pub fn inverse(self) -> Self {
        match self {
            ExtendedComplex::Infinity => ExtendedComplex::Finite(Complex64::new(0.0, 0.0)),
            ExtendedComplex::Finite(t) if t.norm() == 0.0 => ExtendedComplex::Infinity,
            ExtendedComplex::Finite(t) => ExtendedComplex::Finite(t.inv()),
        }
    }
}

/// How terms are grouped into legs of the tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Legs {
    /// One leg per term, disks `|t + ρ_j| <= r0`.
    PerTerm,
    /// Section pencils: term `i` sits on leg `group[i]`, the vanishing points
    /// are `ζ_j = e^{2πij/N}` and the disks are `|log(t/ζ_j)| <= π/N`.
    Colored { group: Vec<usize>, colors: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PencilSpec {
    pub exponents: Vec<Complex64>,
    pub alpha0: Vec<Complex64>,
    pub alphainf: Vec<Complex64>,
    /// Radius of the leg disks.
    pub r0: f64,
    /// Minimal angular distance between distinct vanishing points.
    pub separation: f64,
    pub legs: Legs,
}

/// Fibre of a pencil with the terms whose coefficient cancelled.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilFiber {
    pub sum: ExpSum,
    pub dropped: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    Root,
    Leg(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeCoord {
    pub leg: Leg,
    /// `0` on the root, negative on legs, [`TAU_SENTINEL`] at leg ends.
    pub tau: f64,
}

impl TreeCoord {
    pub const ROOT: TreeCoord = TreeCoord { leg: Leg::Root, tau: 0.0 };
}

fn angle_between(a: Complex64, b: Complex64) -> f64 {
    (a / b).arg().abs()
}

impl PencilSpec {
    /// Pencil with one leg per term. `r0` defaults to half the smallest
    /// distance between the points `-ρ_j`.
    pub fn new(
        exponents: Vec<Complex64>,
        alpha0: Vec<Complex64>,
        alphainf: Vec<Complex64>,
        r0: Option<f64>,
    ) -> Result<Self, PencilError> {
        if exponents.len() != alpha0.len() || alpha0.len() != alphainf.len() {
            return Err(PencilError::LengthMismatch(alpha0.len(), alphainf.len()));
        }
        for (j, (a, b)) in alpha0.iter().zip(&alphainf).enumerate() {
            if (a.re - b.re).abs() > 1e-9 * (1.0 + a.re.abs()) {
                return Err(PencilError::UnequalModuli(j));
            }
        }
        let rho: Vec<Complex64> = alpha0.iter().zip(&alphainf).map(|(a, b)| Complex64::from_polar(1.0, (a - b).im)).collect();
        let mut chord = f64::INFINITY;
        let mut separation = f64::INFINITY;
        for i in 0..rho.len() {
            for j in i + 1..rho.len() {
                chord = chord.min((rho[i] - rho[j]).norm());
                separation = separation.min(angle_between(rho[i], rho[j]));
            }
        }
        if rho.len() < 2 {
            chord = 2.0;
            separation = PI;
        }
        Ok(PencilSpec {
            exponents,
            alpha0,
            alphainf,
            r0: r0.unwrap_or(0.5 * chord),
            separation,
            legs: Legs::PerTerm,
        })
    }

    /// Section pencil: `α_∞ = α`, `α_0 = α + log(-ζ_{group})`.
    pub fn colored(exponents: Vec<Complex64>, alphas: Vec<Complex64>, group: Vec<usize>, colors: usize) -> Self {
        let alpha0 = alphas
            .iter()
            .zip(&group)
            .map(|(a, &g)| a + Complex64::new(0.0, PI + 2.0 * PI * (g + 1) as f64 / colors as f64))
            .collect();
        let separation = if colors >= 2 { 2.0 * PI / colors as f64 } else { 0.0 };
        PencilSpec {
            exponents,
            alpha0,
            alphainf: alphas,
            r0: (PI / colors.max(1) as f64).min(1.0),
            separation,
            legs: Legs::Colored { group, colors },
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// `ρ_j = e^{α_0j - α_∞j}` (unit modulus).
    pub fn ratio(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, (self.alpha0[j] - self.alphainf[j]).im)
    }

    fn end_sum(&self, alphas: &[Complex64]) -> Result<ExpSum, PencilError> {
        let terms = alphas.iter().zip(&self.exponents).map(|(&a, &m)| ExpTerm::planar(a, m));
        Ok(ExpSum::new(1, terms)?)
    }

    pub fn mu0(&self) -> Result<ExpSum, PencilError> {
        self.end_sum(&self.alpha0)
    }

    pub fn muinf(&self) -> Result<ExpSum, PencilError> {
        self.end_sum(&self.alphainf)
    }

    /// The real-coefficient sum `μ°` with `α°_j = Re α_0j`.
    pub fn root_sum(&self) -> Result<ExpSum, PencilError> {
        let alphas: Vec<Complex64> = self.alpha0.iter().map(|a| Complex64::new(a.re, 0.0)).collect();
        self.end_sum(&alphas)
    }

    /// Pencil with the ends exchanged (`t ↦ 1/t`).
    pub fn swapped(&self) -> PencilSpec {
        let mut p = self.clone();
        core::mem::swap(&mut p.alpha0, &mut p.alphainf);
        p
    }

    fn leg_of_term(&self, i: usize) -> usize {
        match &self.legs {
            Legs::PerTerm => i,
            Legs::Colored { group, .. } => group[i],
        }
    }
}

/// The fibre `μ_t`, with cancelled terms dropped.
pub fn pencil_sum(p: &PencilSpec, t: ExtendedComplex) -> Result<PencilFiber, PencilError> {
    let mut terms = Vec::with_capacity(p.len());
    let mut dropped = Vec::new();
    for j in 0..p.len() {
        let alpha = match t {
            ExtendedComplex::Infinity => Some(p.alphainf[j]),
            ExtendedComplex::Finite(t) if t.norm() == 0.0 => Some(p.alpha0[j]),
            ExtendedComplex::Finite(t) => {
                let a = p.alpha0[j];
                let b = t.ln() + p.alphainf[j];
                let s = a.re.max(b.re);
                let w = (a - s).exp() + (b - s).exp();
                if w.norm() <= RELATIVE_CANCELLATION || w.norm() * s.exp() < TINY_COEFFICIENT {
                    None
                } else {
                    log_add(a, b)
                }
            }
        };
        match alpha {
            Some(a) => terms.push(ExpTerm::planar(a, p.exponents[j])),
            None => dropped.push(j),
        }
    }
    if terms.is_empty() {
        return Err(PencilError::AllCoefficientsVanish);
    }
    Ok(PencilFiber { sum: ExpSum::new(1, terms)?, dropped })
}

/// Position of `t` on the tree.
pub fn tree_coordinate(p: &PencilSpec, t: ExtendedComplex) -> TreeCoord {
    let ExtendedComplex::Finite(t) = t else {
        return TreeCoord::ROOT;
    };
    match &p.legs {
        Legs::PerTerm => {
            for j in 0..p.len() {
                let d = (t + p.ratio(j)).norm();
                if d <= p.r0 {
                    let tau = if d <= RELATIVE_CANCELLATION { TAU_SENTINEL } else { (d / p.r0).ln() };
                    return TreeCoord { leg: Leg::Leg(j), tau };
                }
            }
            TreeCoord::ROOT
        }
        Legs::Colored { colors, .. } => {
            if t.norm() == 0.0 {
                return TreeCoord::ROOT;
            }
            let n = *colors as f64;
            for j in 0..*colors {
                let zeta = Complex64::from_polar(1.0, 2.0 * PI * (j + 1) as f64 / n);
                let l = (t / zeta).ln().norm();
                if l <= PI / n {
                    let tau = if l <= RELATIVE_CANCELLATION { TAU_SENTINEL } else { (n / PI * l).ln() };
                    return TreeCoord { leg: Leg::Leg(j), tau };
                }
            }
            TreeCoord::ROOT
        }
    }
}

/// The real sum along the tree: `α°` lowered by `|τ|` on the terms of the
/// active leg, and those terms removed at the sentinel.
pub fn tau_skeleton_sum(p: &PencilSpec, coord: TreeCoord) -> Result<ExpSum, PencilError> {
    let root = p.root_sum()?;
    let Leg::Leg(leg) = coord.leg else {
        return Ok(root);
    };
    if coord.tau <= TAU_SENTINEL {
        return root.filter_terms(|i| p.leg_of_term(i) != leg).map_err(|_| PencilError::AllCoefficientsVanish);
    }
    let drop = coord.tau.abs();
    let delta: Vec<Complex64> = (0..p.len())
        .map(|i| Complex64::new(if p.leg_of_term(i) == leg { -drop } else { 0.0 }, 0.0))
        .collect();
    Ok(root.with_alpha_offsets(&delta))
}

/// `W = μ_0 μ_∞' - μ_0' μ_∞`, assembled term by term:
/// the exponent `m_i + m_j` carries `(m_j - m_i)(a_0i a_∞j - a_0j a_∞i)`.
pub fn wronskian(p: &PencilSpec) -> Result<ExpSum, PencilError> {
    let mut terms = Vec::new();
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            let dm = p.exponents[j] - p.exponents[i];
            let a = p.alpha0[i] + p.alphainf[j];
            let b = p.alpha0[j] + p.alphainf[i] + Complex64::new(0.0, PI);
            let s = a.re.max(b.re);
            let w = (a - s).exp() + (b - s).exp();
            if dm.norm() == 0.0 || w.norm() <= RELATIVE_CANCELLATION {
                continue;
            }
            let alpha = Complex64::new(s, 0.0) + w.ln() + dm.ln();
            terms.push(ExpTerm::planar(alpha, p.exponents[i] + p.exponents[j]));
        }
    }
    ExpSum::new(1, terms).map_err(|e| match e {
        ExpSumError::Empty => PencilError::DegenerateWronskian,
        other => PencilError::Sum(other),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPoint {
    pub z: Complex64,
    pub t: ExtendedComplex,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularSet {
    pub points: Vec<SingularPoint>,
    /// Common zeros of `μ_0` and `μ_∞`.
    pub base_points: Vec<Complex64>,
    /// Order of `W` at each base point.
    pub base_orders: Vec<u32>,
    /// Winding number of `W` on the search contour.
    pub wronskian_count: i64,
}

impl SingularSet {
    /// Total order of `W` over the reported points, base points included.
    pub fn total(&self) -> u64 {
        self.points.iter().map(|p| p.multiplicity as u64).sum::<u64>()
            + self.base_orders.iter().map(|&m| m as u64).sum::<u64>()
    }
}

/// Singular fibres: each zero of `W` is a critical zero of `μ_t` for
/// `t = -μ_0/μ_∞`, unless both ends vanish there (a base point).
pub fn find_pencil_singular(
    p: &PencilSpec,
    window: &Rect,
    grid_density: usize,
    seed: u64,
) -> Result<SingularSet, PencilError> {
    let w = match wronskian(p) {
        Ok(w) => w,
        Err(PencilError::DegenerateWronskian) if p.len() <= 1 => {
            return Ok(SingularSet { points: vec![], base_points: vec![], base_orders: vec![], wronskian_count: 0 })
        }
        Err(e) => return Err(e),
    };
    let roots = find_planar_roots(&w, window, RootMode::Zeros, SolveOptions { grid_density, seed })?;
    let mu0 = p.mu0()?;
    let muinf = p.muinf()?;
    let mut points = Vec::new();
    let mut base_points = Vec::new();
    let mut base_orders = Vec::new();
    for r in &roots.points {
        let z = r.location.0[0];
        let j0 = mu0.planar_jet(z);
        let ji = muinf.planar_jet(z);
        // W vanishes to second order at a base point, so the root is only
        // located to about 1e-8; compare Newton distances, then refine.
        let near = |j: &crate::expsum::PlanarJet| j.value.norm() <= 1e-5 * j.d1.norm().max(1e-300);
        if near(&j0) && near(&ji) {
            let b = refine_base_point(&mu0, &muinf, z);
            if mu0.planar_jet(b).value.norm() < 1e-10 && muinf.planar_jet(b).value.norm() < 1e-10 {
                base_points.push(b);
                base_orders.push(r.multiplicity);
                continue;
            }
        }
        let t = if ji.value.norm() < 1e-14 * j0.value.norm().max(1e-300) {
            ExtendedComplex::Infinity
        } else {
            ExtendedComplex::Finite(-(j0.value / ji.value) * (j0.log_scale - ji.log_scale).exp())
        };
        points.push(SingularPoint { z, t, multiplicity: r.multiplicity });
    }
    Ok(SingularSet { points, base_points, base_orders, wronskian_count: roots.certified_count.unwrap_or(0) })
}

/// Gauss-Newton on `(μ_0, μ_∞) = 0`.
fn refine_base_point(mu0: &ExpSum, muinf: &ExpSum, mut z: Complex64) -> Complex64 {
    for _ in 0..50 {
        let a = mu0.planar_jet(z);
        let b = muinf.planar_jet(z);
        let num = a.d1.conj() * a.value + b.d1.conj() * b.value;
        let den = a.d1.norm_sqr() + b.d1.norm_sqr();
        if den == 0.0 {
            break;
        }
        let step = num / den;
        z -= step;
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Samples of the parameter sphere: `0`, `∞` and circles of radius
/// `0.5, 1, 2` and a large radius, at angles offset from the vanishing points.
pub fn default_t_samples(count: usize) -> Vec<ExtendedComplex> {
    let mut out = vec![ExtendedComplex::finite(0.0, 0.0), ExtendedComplex::Infinity];
    let radii = [0.5, 1.0, 2.0, 1e6];
    let per = count.saturating_sub(2).div_ceil(radii.len()).max(1);
    'outer: for (ri, r) in radii.iter().enumerate() {
        for k in 0..per {
            if out.len() >= count {
                break 'outer;
            }
            let theta = 2.0 * PI * (k as f64 + 0.5 + 0.137 * ri as f64) / per as f64;
            out.push(ExtendedComplex::Finite(Complex64::from_polar(*r, theta)));
        }
    }
    out.truncate(count);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberCheck {
    pub t: ExtendedComplex,
    pub coord: TreeCoord,
    pub zeros: usize,
    pub violations: Vec<Complex64>,
    /// Smallest `c - gap_2` over the zeros in the tree skeleton.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PencilVerification {
    pub c: f64,
    pub fibers: Vec<FiberCheck>,
    /// Largest distance from a root-skeleton vertex to a sampled tree
    /// skeleton; `None` when the check is refused (zero separation).
    pub vertex_distance: Option<f64>,
    pub vertex_ok: Option<bool>,
    /// Constant used for the singular-set check (`3c`).
    pub singular_c: f64,
    pub singular_violations: Vec<Complex64>,
    pub singular: SingularSet,
    pub passed: bool,
}

/// Checks fibre containment, the root-vertex property and the location of the
/// singular set.
pub fn verify_pencil(
    p: &PencilSpec,
    window: &Rect,
    t_samples: &[ExtendedComplex],
    c: f64,
    grid_density: usize,
) -> Result<PencilVerification, PencilError> {
    let opts = SolveOptions { grid_density, seed: 0 };
    let mut fibers = Vec::with_capacity(t_samples.len());
    let mut coords = Vec::with_capacity(t_samples.len());
    for &t in t_samples {
        let fiber = pencil_sum(p, t)?;
        let coord = tree_coordinate(p, t);
        coords.push(coord);
        let tilde = tau_skeleton_sum(p, coord)?;
        let zeros = if fiber.sum.len() >= 2 {
            find_planar_roots(&fiber.sum, window, RootMode::Zeros, opts)?.planar_points()
        } else {
            Vec::new()
        };
        let mut violations = Vec::new();
        let mut min_margin = f64::INFINITY;
        for &z in &zeros {
            let dom = tilde.dominance(&[z], c)?;
            let second = dom.gaps.get(1).map_or(f64::INFINITY, |g| g.1);
            min_margin = min_margin.min(c - second);
            if !locate(&tilde, &[z], c)?.in_u_c[1] {
                violations.push(z);
            }
        }
        fibers.push(FiberCheck { t, coord, zeros: zeros.len(), violations, min_margin });
    }

    let (vertex_distance, vertex_ok) = if p.separation > 1e-12 {
        let root = p.root_sum()?;
        let sk = build_skeleton_2d(&root, window)?;
        let mut worst: f64 = 0.0;
        for v in &sk.vertices {
            for &coord in &coords {
                let tilde = tau_skeleton_sum(p, coord)?;
                worst = worst.max(skeleton_distance(&tilde, &[v.point])?);
            }
        }
        (Some(worst), Some(worst <= 1e-8 * window.diameter()))
    } else {
        (None, None)
    };

    let singular = find_pencil_singular(p, window, grid_density, 0)?;
    let singular_c = 3.0 * c;
    let mut singular_violations = Vec::new();
    for s in &singular.points {
        if !near_union_vertices(p, s, singular_c)? {
            singular_violations.push(s.z);
        }
    }
    let fibers_ok = fibers.iter().all(|f| f.violations.is_empty());
    let passed = fibers_ok && vertex_ok.unwrap_or(true) && singular_violations.is_empty();
    Ok(PencilVerification {
        c,
        fibers,
        vertex_distance,
        vertex_ok,
        singular_c,
        singular_violations,
        singular,
        passed,
    })
}

/// Whether a singular point lies in `U_c` of the vertex set of some tree
/// skeleton: its own `τ_t` first, then a scan along every leg.
fn near_union_vertices(p: &PencilSpec, s: &SingularPoint, c: f64) -> Result<bool, PencilError> {
    let mut coords = vec![tree_coordinate(p, s.t), TreeCoord::ROOT];
    let legs = match &p.legs {
        Legs::PerTerm => p.len(),
        Legs::Colored { colors, .. } => *colors,
    };
    for j in 0..legs {
        for k in 1..=32 {
            coords.push(TreeCoord { leg: Leg::Leg(j), tau: -0.25 * k as f64 });
        }
        coords.push(TreeCoord { leg: Leg::Leg(j), tau: TAU_SENTINEL });
    }
    for coord in coords {
        let Ok(tilde) = tau_skeleton_sum(p, coord) else {
            continue;
        };
        if locate(&tilde, &[s.z], c)?.in_u_c[0] {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Count of `W` on the boundary of `window` (the expected singular total).
pub fn wronskian_winding(p: &PencilSpec, window: &Rect) -> Result<i64, PencilError> {
    let w = wronskian(p)?;
    Ok(count_winding(&w, WindingTarget::Value, &Contour::Box(*window), 64)?)
}
