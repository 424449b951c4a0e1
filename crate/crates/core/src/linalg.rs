//! Small dense linear-algebra helpers and deterministic summation.

use std::ops::Add;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Below this length a plain left-to-right loop is used.
const PAIRWISE_BLOCK: usize = 16;

/// Pairwise (cascade) summation in a fixed tree order.
pub fn pairwise_sum<T>(xs: &[T]) -> T
where
    T: Copy + Zero + Add<Output = T>,
{
    if xs.len() <= PAIRWISE_BLOCK {
        let mut acc = T::zero();
        for &x in xs {
            acc = acc + x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Lower Cholesky factor `L` with `L L^* = G`.
///
/// Fails with the offending pivot when `G` is not numerically positive
/// definite.
pub fn cholesky_lower(g: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let d = g.nrows();
    let mut l = DMatrix::<Complex64>::zeros(d, d);
    for j in 0..d {
        let mut diag = g[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::RankDeficient {
                pivot: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..d {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix by forward substitution.
pub fn invert_lower(l: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = l.nrows();
    let mut inv = DMatrix::<Complex64>::zeros(d, d);
    for col in 0..d {
        inv[(col, col)] = Complex64::new(1.0, 0.0) / l[(col, col)];
        for i in (col + 1)..d {
            let mut s = Complex64::zero();
            for k in col..i {
                s += l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = -s / l[(i, i)];
        }
    }
    inv
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    if h.nrows() == 0 {
        return Vec::new();
    }
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Singular values of a real matrix, descending.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Least-squares solution of `A c ≈ y` via SVD.
pub fn least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(y, 1e-14).expect("SVD computed with both factors")
}

/// Straight-line fit `y ≈ intercept + slope · x`, returning
/// `(slope, intercept, r_squared)`.
pub fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}
