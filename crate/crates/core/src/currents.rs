//! Pairings of planar zero sets and of the skeleton current with test
//! functions, and their behaviour as `k` grows.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{adaptive_simpson, Rect};
use crate::section::{build_section, generic_net, random_amplitudes, Net, NetParams, SectionError, SectionSpec};
use crate::solve::{find_planar_roots, RootMode, SolveOptions, MERGE_RADIUS};
use crate::voronoi::voronoi;

/// Smooth test functions with sup-norm bounds on the function and its first
/// two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `h·exp(1 - 1/(1 - r²/R²))` inside the disc, zero outside.
    Bump { center: Complex64, radius: f64, height: f64 },
    /// `cos(2π fx x) cos(2π fy y)`.
    Trig { fx: f64, fy: f64 },
    /// Linear combination.
    Combination(Vec<(f64, TestFunction)>),
}

impl TestFunction {
    pub fn value(&self, z: Complex64) -> f64 {
        match self {
            TestFunction::Constant(c) => *c,
            TestFunction::Bump { center, radius, height } => {
                let s = (z - center).norm_sqr() / (radius * radius);
                if s >= 1.0 {
                    0.0
                } else {
                    height * (1.0 - 1.0 / (1.0 - s)).exp()
                }
            }
            TestFunction::Trig { fx, fy } => (2.0 * PI * fx * z.re).cos() * (2.0 * PI * fy * z.im).cos(),
            TestFunction::Combination(parts) => parts.iter().map(|(w, f)| w * f.value(z)).sum(),
        }
    }

    /// `(|ψ|, |dψ|, |d²ψ|)` sup bounds.
    pub fn bounds(&self) -> (f64, f64, f64) {
        match self {
            TestFunction::Constant(c) => (c.abs(), 0.0, 0.0),
            TestFunction::Bump { radius, height, .. } => {
                // Sup norms of the unit profile, measured once on a fine grid.
                let h = height.abs();
                (h, h * 2.171 / radius, h * 21.07 / (radius * radius))
            }
            TestFunction::Trig { fx, fy } => {
                let w = 2.0 * PI * fx.abs().hypot(fy.abs());
                (1.0, w, w * w)
            }
            TestFunction::Combination(parts) => parts.iter().fold((0.0, 0.0, 0.0), |acc, (w, f)| {
                let b = f.bounds();
                (acc.0 + w.abs() * b.0, acc.1 + w.abs() * b.1, acc.2 + w.abs() * b.2)
            }),
        }
    }

    /// Whether `ψ >= 0` everywhere.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            TestFunction::Constant(c) => *c >= 0.0,
            TestFunction::Bump { height, .. } => *height >= 0.0,
            TestFunction::Trig { .. } => false,
            TestFunction::Combination(parts) => parts.iter().all(|(w, f)| *w >= 0.0 && f.is_nonnegative()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Constant(c) => format!("constant({c})"),
            TestFunction::Bump { center, radius, height } => {
                format!("bump({},{};{};{})", center.re, center.im, radius, height)
            }
            TestFunction::Trig { fx, fy } => format!("trig({fx},{fy})"),
            TestFunction::Combination(parts) => {
                let names: Vec<String> = parts.iter().map(|(w, f)| format!("{w}*{}", f.name())).collect();
                names.join("+")
            }
        }
    }

    /// `∫ψ` over `domain`.
    pub fn integral(&self, domain: &Rect) -> f64 {
        let (w, h) = (domain.width(), domain.height());
        let inner = |y: f64| {
            adaptive_simpson(&|x: f64| self.value(Complex64::new(domain.x0 + x * w, domain.y0 + y * h)), 1e-11)
        };
        adaptive_simpson(&inner, 1e-10) * w * h
    }
}

/// Constant 1, a bump in the middle of the unit square, and a product of
/// cosines.
pub fn catalog() -> Vec<TestFunction> {
    vec![
        TestFunction::Constant(1.0),
        TestFunction::Bump { center: Complex64::new(0.5, 0.5), radius: 0.35, height: 1.0 },
        TestFunction::Trig { fx: 1.0, fy: 1.0 },
    ]
}

/// `∫_Γ ψ β_Γ`: over each Voronoi edge between `p_i` and `p_j` in the domain,
/// `½|p_i - p_j|` times the line integral of `ψ`.
pub fn beta_pairing(net: &Net, psi: &TestFunction) -> f64 {
    let sites: Vec<Complex64> = net.images(2.0 * net.epsilon).into_iter().map(|(p, _)| p).collect();
    let vor = voronoi(&sites, &net.domain);
    vor.edges
        .iter()
        .map(|e| {
            let (a, b) = (e.start, e.end);
            let len = (b - a).norm();
            let line = adaptive_simpson(&|t: f64| psi.value(a + (b - a) * t), 1e-12) * len;
            0.5 * (sites[e.sites.0] - sites[e.sites.1]).norm() * line
        })
        .sum()
}

/// Zero-set pairing of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroPairing {
    /// `2π Σ mult·ψ(z)` over zeros in the half-open window.
    pub value: f64,
    /// Multiplicity-weighted number of zeros in the window.
    pub count: u64,
    /// Zeros within the merge radius of the window boundary.
    pub boundary: usize,
    pub zeros: Vec<Complex64>,
}

/// Zeros of the section in the half-open `window` with multiplicities.
/// Zeros on the right or top edge belong to the neighbouring window.
pub fn section_zeros(spec: &SectionSpec, window: &Rect) -> Result<Vec<(Complex64, u32)>, SectionError> {
    let (pruned, _) = spec.global_sum.prune_planar(window.x0, window.y0, window.x1, window.y1);
    let roots = find_planar_roots(&pruned, window, RootMode::Zeros, SolveOptions::default())?;
    Ok(roots
        .points
        .iter()
        .map(|r| (r.location.0[0], r.multiplicity))
        .filter(|(z, _)| z.re >= window.x0 && z.re < window.x1 && z.im >= window.y0 && z.im < window.y1)
        .collect())
}

/// Pairs given zeros with `ψ`. Each zero carries mass `2π`, so that
/// `value/k` is comparable with [`beta_pairing`].
pub fn pair_zeros(zeros: &[(Complex64, u32)], psi: &TestFunction, window: &Rect) -> ZeroPairing {
    let mut out = ZeroPairing { value: 0.0, count: 0, boundary: 0, zeros: Vec::new() };
    for &(z, mult) in zeros {
        if window.inner_distance(z) < MERGE_RADIUS {
            out.boundary += 1;
        }
        out.value += 2.0 * PI * mult as f64 * psi.value(z);
        out.count += mult as u64;
        out.zeros.push(z);
    }
    out
}

/// Pairs the zero set of the section with `ψ`.
pub fn zero_pairing(spec: &SectionSpec, psi: &TestFunction, window: &Rect) -> Result<ZeroPairing, SectionError> {
    Ok(pair_zeros(&section_zeros(spec, window)?, psi, window))
}

/// How `ε` depends on `k` in a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonRule {
    Fixed(f64),
    /// `ε_k = k^{exponent}`.
    Power(f64),
}

impl EpsilonRule {
    pub fn epsilon(&self, k: f64) -> f64 {
        match *self {
            EpsilonRule::Fixed(e) => e,
            EpsilonRule::Power(p) => k.powf(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairingRow {
    pub k: f64,
    pub epsilon: f64,
    pub psi: String,
    pub zero_pairing: f64,
    pub beta_pairing: f64,
    /// `|zero_pairing/k - beta_pairing|`.
    pub gap_over_k: f64,
    /// `∫ψ` over the domain.
    pub omega_pairing: f64,
    /// `|zero_pairing/k - omega_pairing|`.
    pub omega_gap: f64,
    pub zero_count: u64,
    pub boundary_zeros: usize,
    pub net_points: usize,
    /// Failure recorded for this row, if any.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairingTable {
    pub rows: Vec<PairingRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub domain: Rect,
    pub rule: EpsilonRule,
    pub k_list: Vec<f64>,
    pub catalog: Vec<TestFunction>,
    pub periodic: bool,
    pub seed: u64,
}

/// The net used for one `k`: fixed-ε studies share a single net.
pub fn study_net(cfg: &StudyConfig, k: f64) -> Result<Net, SectionError> {
    let eps = cfg.rule.epsilon(k);
    let seed = match cfg.rule {
        EpsilonRule::Fixed(_) => cfg.seed,
        EpsilonRule::Power(_) => cfg.seed ^ k.to_bits(),
    };
    let params = NetParams { periodic: cfg.periodic, seed, ..NetParams::new(eps) };
    generic_net(&cfg.domain, &params)
}

/// Rows of one `k`, one per catalog entry. Failures are recorded, not raised.
pub fn study_rows(cfg: &StudyConfig, net: &Net, k: f64) -> Vec<PairingRow> {
    let amps = random_amplitudes(net.points.len(), cfg.seed);
    let zeros = build_section(net, &amps, k).and_then(|s| section_zeros(&s, &cfg.domain));
    cfg.catalog
        .iter()
        .map(|psi| {
            let omega = psi.integral(&cfg.domain);
            let beta = beta_pairing(net, psi);
            let mut row = PairingRow {
                k,
                epsilon: net.epsilon,
                psi: psi.name(),
                zero_pairing: f64::NAN,
                beta_pairing: beta,
                gap_over_k: f64::NAN,
                omega_pairing: omega,
                omega_gap: f64::NAN,
                zero_count: 0,
                boundary_zeros: 0,
                net_points: net.points.len(),
                note: None,
            };
            match zeros.as_ref().map(|z| pair_zeros(z, psi, &cfg.domain)) {
                Ok(zp) => {
                    row.zero_pairing = zp.value;
                    row.gap_over_k = (zp.value / k - beta).abs();
                    row.omega_gap = (zp.value / k - omega).abs();
                    row.zero_count = zp.count;
                    row.boundary_zeros = zp.boundary;
                }
                Err(e) => row.note = Some(format!("{e}")),
            }
            row
        })
        .collect()
}

/// Builds both pairings for every `k` and catalog entry, sorted by `k`.
pub fn limit_study(cfg: &StudyConfig) -> Result<PairingTable, SectionError> {
    let mut ks = cfg.k_list.clone();
    ks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let fixed = match cfg.rule {
        EpsilonRule::Fixed(_) => Some(study_net(cfg, ks.first().copied().unwrap_or(1.0))?),
        EpsilonRule::Power(_) => None,
    };
    let mut rows = Vec::new();
    for &k in &ks {
        let net = match &fixed {
            Some(n) => n.clone(),
            None => study_net(cfg, k)?,
        };
        rows.extend(study_rows(cfg, &net, k));
    }
    Ok(PairingTable { rows })
}
