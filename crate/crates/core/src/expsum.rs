//! Exponential sums `μ(z) = Σ exp(α_i + m_i·z)` on ℂⁿ.
//!
//! The pairing `m·z = Σ_j m_j z_j` is complex bilinear. Every evaluation is
//! carried out relative to the dominant real exponent `b(z)`, so values are
//! available as a pair `(log_scale, scaled)` and never overflow internally.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Gap below which two real exponents count as tied.
pub const TOL_TIE: f64 = 1e-9;

/// Terms more than this far below `b(z)` are skipped during evaluation.
///
/// `e^-80` is far below one ulp of the dominant term, so skipping them does not
/// change any returned bit in practice while saving the `exp` calls.
pub const NEGLIGIBLE_GAP: f64 = 80.0;

/// Largest log-magnitude that still fits in an `f64`.
const MAX_LOG_F64: f64 = 709.0;

/// Coefficients with modulus below this are treated as cancelled.
pub const TINY_COEFFICIENT: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExpSumError {
    #[error("an exponential sum needs at least one term")]
    Empty,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coefficient or exponent in term {0}")]
    NonFinite(usize),
    #[error("value overflows f64 (log-magnitude {0})")]
    Overflow(f64),
    #[error("jet order must be 0, 1 or 2, got {0}")]
    InvalidOrder(u8),
}

/// A point or exponent vector in ℂⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVec(pub Vec<Complex64>);

impl ComplexVec {
    pub fn zeros(dim: usize) -> Self {
        ComplexVec(vec![Complex64::new(0.0, 0.0); dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}

impl From<Vec<Complex64>> for ComplexVec {
    fn from(v: Vec<Complex64>) -> Self {
        ComplexVec(v)
    }
}

/// One term `exp(alpha + exponent·z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpTerm {
    pub alpha: Complex64,
    pub exponent: ComplexVec,
}

impl ExpTerm {
    pub fn new(alpha: Complex64, exponent: Vec<Complex64>) -> Self {
        ExpTerm { alpha, exponent: ComplexVec(exponent) }
    }

    /// Planar term `exp(alpha + m z)`.
    pub fn planar(alpha: Complex64, m: Complex64) -> Self {
        ExpTerm::new(alpha, vec![m])
    }
}

/// Bilinear pairing `Σ a_j b_j`.
#[inline]
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x * y)
}

/// `log(e^a + e^b)` for complex logarithms, or `None` when the sum cancels.
pub fn log_add(a: Complex64, b: Complex64) -> Option<Complex64> {
    let s = a.re.max(b.re);
    let w = (a - s).exp() + (b - s).exp();
    if w.norm() < TINY_COEFFICIENT {
        None
    } else {
        Some(Complex64::new(s, 0.0) + w.ln())
    }
}

/// Exponential sum with exponents stored in a flat row-major buffer.
///
/// Duplicate exponents are merged on construction, so every exponent vector
/// appears once.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    dim: usize,
    alphas: Vec<Complex64>,
    exponents: Vec<Complex64>,
}

/// Dominance data at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Dominance {
    /// `b(z) = max_i Re(α_i + m_i·z)`.
    pub b: f64,
    /// Indices within [`TOL_TIE`] of the maximum.
    pub argmax_set: Vec<usize>,
    /// Indices whose gap is strictly below the probe constant `c`.
    pub near_set: Vec<usize>,
    /// `(index, b - Re(α_i + m_i·z))`, sorted by gap then index.
    pub gaps: Vec<(usize, f64)>,
}

/// Value, gradient and (row-major) Hessian. Unrequested parts are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub gradient: Vec<Complex64>,
    pub hessian: Vec<Complex64>,
}

/// A [`Jet`] whose true value is `exp(log_scale) * jet`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledJet {
    pub log_scale: f64,
    pub jet: Jet,
}

/// Planar evaluation: `exp(log_scale) * (value, d1, d2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarJet {
    pub log_scale: f64,
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

impl ExpSum {
    /// Builds a sum, merging duplicate exponents by adding their coefficients.
    ///
    /// Terms whose merged coefficient cancels are removed; if nothing is left
    /// the sum is rejected as empty.
    pub fn new<I>(dim: usize, terms: I) -> Result<Self, ExpSumError>
    where
        I: IntoIterator<Item = ExpTerm>,
    {
        let mut alphas: Vec<Option<Complex64>> = Vec::new();
        let mut exponents: Vec<Complex64> = Vec::new();
        for (idx, term) in terms.into_iter().enumerate() {
            if term.exponent.dim() != dim {
                return Err(ExpSumError::DimensionMismatch {
                    expected: dim,
                    found: term.exponent.dim(),
                });
            }
            let finite = term.alpha.re.is_finite()
                && term.alpha.im.is_finite()
                && term.exponent.0.iter().all(|c| c.re.is_finite() && c.im.is_finite());
            if !finite {
                return Err(ExpSumError::NonFinite(idx));
            }
            let existing = (0..alphas.len())
                .find(|&k| exponents[k * dim..(k + 1) * dim] == term.exponent.0[..]);
            match existing {
                Some(k) => {
                    alphas[k] = match alphas[k] {
                        Some(a) => log_add(a, term.alpha),
                        None => Some(term.alpha),
                    };
                }
                None => {
                    alphas.push(Some(term.alpha));
                    exponents.extend_from_slice(&term.exponent.0);
                }
            }
        }
        let mut out_a = Vec::with_capacity(alphas.len());
        let mut out_m = Vec::with_capacity(exponents.len());
        for (k, a) in alphas.iter().enumerate() {
            if let Some(a) = a {
                out_a.push(*a);
                out_m.extend_from_slice(&exponents[k * dim..(k + 1) * dim]);
            }
        }
        if out_a.is_empty() {
            return Err(ExpSumError::Empty);
        }
        Ok(ExpSum { dim, alphas: out_a, exponents: out_m })
    }

    /// Planar sum from `(alpha, m)` pairs.
    pub fn planar(terms: &[(Complex64, Complex64)]) -> Result<Self, ExpSumError> {
        ExpSum::new(1, terms.iter().map(|&(a, m)| ExpTerm::planar(a, m)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of terms (`l + 1` in the usual indexing).
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alpha(&self, i: usize) -> Complex64 {
        self.alphas[i]
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }

    pub fn exponent(&self, i: usize) -> &[Complex64] {
        &self.exponents[i * self.dim..(i + 1) * self.dim]
    }

    /// Planar exponent of term `i`. Only meaningful when `dim == 1`.
    #[inline]
    pub fn planar_exponent(&self, i: usize) -> Complex64 {
        self.exponents[i * self.dim]
    }

    pub fn terms(&self) -> impl Iterator<Item = ExpTerm> + '_ {
        (0..self.len()).map(move |i| ExpTerm::new(self.alphas[i], self.exponent(i).to_vec()))
    }

    /// Exponent points `m_i`, one per term.
    pub fn exponent_points(&self) -> Vec<ComplexVec> {
        (0..self.len()).map(|i| ComplexVec(self.exponent(i).to_vec())).collect()
    }

    fn check_dim(&self, z: &[Complex64]) -> Result<(), ExpSumError> {
        if z.len() != self.dim {
            Err(ExpSumError::DimensionMismatch { expected: self.dim, found: z.len() })
        } else {
            Ok(())
        }
    }

    /// `α_i + m_i·z`.
    #[inline]
    pub fn exponent_at(&self, i: usize, z: &[Complex64]) -> Complex64 {
        self.alphas[i] + dot(self.exponent(i), z)
    }

    /// `b(z)`, the largest real exponent.
    pub fn max_real(&self, z: &[Complex64]) -> Result<f64, ExpSumError> {
        self.check_dim(z)?;
        Ok((0..self.len())
            .map(|i| self.exponent_at(i, z).re)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Dominance data at `z` with probe constant `c`.
    pub fn dominance(&self, z: &[Complex64], c: f64) -> Result<Dominance, ExpSumError> {
        self.check_dim(z)?;
        let reals: Vec<f64> = (0..self.len()).map(|i| self.exponent_at(i, z).re).collect();
        Ok(dominance_from_reals(&reals, c))
    }

    /// Value and derivatives up to `order` (0, 1 or 2), relative to `b(z)`.
    pub fn scaled_jet(&self, z: &[Complex64], order: u8) -> Result<ScaledJet, ExpSumError> {
        self.check_dim(z)?;
        if order > 2 {
            return Err(ExpSumError::InvalidOrder(order));
        }
        let n = self.dim;
        let ex: Vec<Complex64> = (0..self.len()).map(|i| self.exponent_at(i, z)).collect();
        let b = ex.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
        let mut value = Complex64::new(0.0, 0.0);
        let mut gradient = vec![Complex64::new(0.0, 0.0); if order >= 1 { n } else { 0 }];
        let mut hessian = vec![Complex64::new(0.0, 0.0); if order >= 2 { n * n } else { 0 }];
        for (i, e) in ex.iter().enumerate() {
            if e.re < b - NEGLIGIBLE_GAP {
                continue;
            }
            let w = (e - b).exp();
            value += w;
            if order >= 1 {
                let m = self.exponent(i);
                for j in 0..n {
                    let mw = m[j] * w;
                    gradient[j] += mw;
                    if order >= 2 {
                        for k in 0..n {
                            hessian[j * n + k] += mw * m[k];
                        }
                    }
                }
            }
        }
        Ok(ScaledJet { log_scale: b, jet: Jet { value, gradient, hessian } })
    }

    /// Unscaled jet. Fails with [`ExpSumError::Overflow`] when `b(z)` is too
    /// large for `f64`.
    pub fn evaluate_jet(&self, z: &[Complex64], order: u8) -> Result<Jet, ExpSumError> {
        let sj = self.scaled_jet(z, order)?;
        let peak = sj.jet.value.norm().max(sj.jet.gradient.iter().map(|g| g.norm()).fold(0.0, f64::max));
        let log_mag = sj.log_scale + if peak > 0.0 { peak.ln() } else { 0.0 };
        if log_mag > MAX_LOG_F64 {
            return Err(ExpSumError::Overflow(log_mag));
        }
        let s = sj.log_scale.exp();
        let Jet { value, gradient, hessian } = sj.jet;
        Ok(Jet {
            value: value * s,
            gradient: gradient.into_iter().map(|g| g * s).collect(),
            hessian: hessian.into_iter().map(|h| h * s).collect(),
        })
    }

    /// Fast planar evaluation of `μ, μ', μ''` relative to `b(z)`.
    #[inline]
    pub fn planar_jet(&self, z: Complex64) -> PlanarJet {
        debug_assert_eq!(self.dim, 1);
        let mut b = f64::NEG_INFINITY;
        for i in 0..self.alphas.len() {
            let r = self.alphas[i].re + (self.exponents[i] * z).re;
            if r > b {
                b = r;
            }
        }
        let mut value = Complex64::new(0.0, 0.0);
        let mut d1 = Complex64::new(0.0, 0.0);
        let mut d2 = Complex64::new(0.0, 0.0);
        for i in 0..self.alphas.len() {
            let m = self.exponents[i];
            let e = self.alphas[i] + m * z;
            if e.re < b - NEGLIGIBLE_GAP {
                continue;
            }
            let w = Complex64::from_polar((e.re - b).exp(), e.im);
            value += w;
            let mw = m * w;
            d1 += mw;
            d2 += m * mw;
        }
        PlanarJet { log_scale: b, value, d1, d2 }
    }

    /// `e^{-b(base)} (|μ(z)| + |dμ(z)|)`.
    pub fn normalized_c1(&self, z: &[Complex64], base: &[Complex64]) -> Result<f64, ExpSumError> {
        let sj = self.scaled_jet(z, 1)?;
        let b_base = self.max_real(base)?;
        let grad = sj.jet.gradient.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
        Ok((sj.log_scale - b_base).exp() * (sj.jet.value.norm() + grad))
    }

    /// Recenter at `q` (`α_i += m_i·q - b(q)`), then shift every exponent by
    /// `-m_*`.
    ///
    /// Recentering makes `b(0) = 0`; the shift multiplies the sum by
    /// `e^{-m_*·z}`.
    pub fn transform(
        &self,
        shift: Option<&[Complex64]>,
        recenter: Option<&[Complex64]>,
    ) -> Result<ExpSum, ExpSumError> {
        let mut alphas = self.alphas.clone();
        let mut exponents = self.exponents.clone();
        if let Some(q) = recenter {
            self.check_dim(q)?;
            let ex: Vec<Complex64> = (0..self.len()).map(|i| self.exponent_at(i, q)).collect();
            let b = ex.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
            for (a, e) in alphas.iter_mut().zip(ex) {
                *a = Complex64::new(e.re - b, e.im);
            }
        }
        if let Some(m) = shift {
            self.check_dim(m)?;
            for row in exponents.chunks_mut(self.dim) {
                for (x, s) in row.iter_mut().zip(m) {
                    *x -= s;
                }
            }
        }
        Ok(ExpSum { dim: self.dim, alphas, exponents })
    }

    /// Partial derivative `∂μ/∂z_j` as an exponential sum.
    ///
    /// Returns `None` if every term has a zero `j`-th exponent.
    pub fn derivative(&self, j: usize) -> Option<ExpSum> {
        let terms: Vec<ExpTerm> = (0..self.len())
            .filter_map(|i| {
                let mj = self.exponent(i)[j];
                if mj == Complex64::new(0.0, 0.0) {
                    None
                } else {
                    Some(ExpTerm::new(self.alphas[i] + mj.ln(), self.exponent(i).to_vec()))
                }
            })
            .collect();
        ExpSum::new(self.dim, terms).ok()
    }

    /// Same sum with term `i` multiplied by `e^{delta_i}`.
    pub fn with_alpha_offsets(&self, delta: &[Complex64]) -> ExpSum {
        let alphas = self.alphas.iter().zip(delta).map(|(a, d)| a + d).collect();
        ExpSum { dim: self.dim, alphas, exponents: self.exponents.clone() }
    }

    /// Keeps the terms for which `keep(i)` holds.
    pub fn filter_terms<F: Fn(usize) -> bool>(&self, keep: F) -> Result<ExpSum, ExpSumError> {
        let mut alphas = Vec::new();
        let mut exponents = Vec::new();
        for i in 0..self.len() {
            if keep(i) {
                alphas.push(self.alphas[i]);
                exponents.extend_from_slice(self.exponent(i));
            }
        }
        if alphas.is_empty() {
            return Err(ExpSumError::Empty);
        }
        Ok(ExpSum { dim: self.dim, alphas, exponents })
    }

    /// Drops planar terms that stay at least [`NEGLIGIBLE_GAP`] below some
    /// other term on the whole box `[x0,x1]×[y0,y1]`. Returns the sum and the
    /// indices kept.
    ///
    /// Differences of real exponents are affine, so checking the four corners
    /// is exact.
    pub fn prune_planar(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> (ExpSum, Vec<usize>) {
        debug_assert_eq!(self.dim, 1);
        let corners = [
            Complex64::new(x0, y0),
            Complex64::new(x1, y0),
            Complex64::new(x0, y1),
            Complex64::new(x1, y1),
        ];
        let reals: Vec<[f64; 4]> = (0..self.len())
            .map(|i| {
                let mut r = [0.0; 4];
                for (k, c) in corners.iter().enumerate() {
                    r[k] = self.alphas[i].re + (self.exponents[i] * c).re;
                }
                r
            })
            .collect();
        // Only the terms that win at some corner can be the dominating term.
        let mut winners: Vec<usize> = Vec::new();
        for k in 0..4 {
            let w = (0..self.len())
                .max_by(|&a, &b| reals[a][k].partial_cmp(&reals[b][k]).unwrap_or(Ordering::Equal))
                .unwrap_or(0);
            if !winners.contains(&w) {
                winners.push(w);
            }
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| {
                !winners.iter().any(|&j| {
                    j != i && (0..4).all(|k| reals[j][k] - reals[i][k] >= NEGLIGIBLE_GAP)
                })
            })
            .collect();
        let pruned = self.filter_terms(|i| keep.binary_search(&i).is_ok()).expect("winners survive");
        (pruned, keep)
    }

    /// Maximum pairwise distance between exponents.
    pub fn exponent_spread(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let d: f64 = self
                    .exponent(i)
                    .iter()
                    .zip(self.exponent(j))
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum();
                best = best.max(d.sqrt());
            }
        }
        best
    }
}

/// Dominance data from precomputed real exponents.
pub fn dominance_from_reals(reals: &[f64], c: f64) -> Dominance {
    let b = reals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut gaps: Vec<(usize, f64)> = reals.iter().map(|r| b - r).enumerate().collect();
    gaps.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal).then(x.0.cmp(&y.0)));
    let mut argmax_set: Vec<usize> = gaps.iter().filter(|g| g.1 <= TOL_TIE).map(|g| g.0).collect();
    let mut near_set: Vec<usize> = gaps.iter().filter(|g| g.1 < c).map(|g| g.0).collect();
    argmax_set.sort_unstable();
    near_set.sort_unstable();
    Dominance { b, argmax_set, near_set, gaps }
}
