//! Realification of ℂⁿ and the few dense routines the geometry needs.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Rows `(Re v_1, Im v_1, …, Re v_n, Im v_n)`, one per input vector.
pub fn realify_rows(vectors: &[&[Complex64]]) -> DMatrix<f64> {
    let cols = vectors.first().map_or(0, |v| 2 * v.len());
    DMatrix::from_fn(vectors.len(), cols, |r, c| {
        let z = vectors[r][c / 2];
        if c % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

/// `sqrt(det(E Eᵀ))`, the k-volume of the parallelotope spanned by the rows.
///
/// Taken as the product of singular values: the determinant of the Gram
/// matrix loses half the digits and leaves degenerate faces at ~1e-8.
pub fn gram_volume(rows: &DMatrix<f64>) -> f64 {
    if rows.nrows() == 0 {
        return 1.0;
    }
    if rows.nrows() > rows.ncols() {
        return 0.0;
    }
    rows.clone().svd(false, false).singular_values.iter().product()
}

/// Singular values of a real matrix, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    s
}

/// Dimension of the real affine span of `points`, counting singular values of
/// the difference matrix above `rel_tol * diam`.
pub fn affine_rank(points: &[&[Complex64]], rel_tol: f64) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let base = points[0];
    let diffs: Vec<Vec<Complex64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let refs: Vec<&[Complex64]> = diffs.iter().map(|d| d.as_slice()).collect();
    let mut diam: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            diam = diam.max(distance(points[i], points[j]));
        }
    }
    if diam == 0.0 {
        return 0;
    }
    singular_values(&realify_rows(&refs)).iter().filter(|&&s| s > rel_tol * diam).count()
}

/// Euclidean distance in ℂⁿ = ℝ²ⁿ.
pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// `k!` as a float.
pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}
