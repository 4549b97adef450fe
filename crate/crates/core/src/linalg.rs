//! Thin helpers over `nalgebra` for the small least-squares problems here.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Least-squares solution of `design · β ≈ response` through the normal
/// equations, plus the inverse Gram matrix (XᵀX)⁻¹ and the residual sum of
/// squares.
pub(crate) struct LeastSquares {
    pub beta: Vec<f64>,
    pub gram_inverse: DMatrix<f64>,
    pub rss: f64,
}

pub(crate) fn least_squares(design: &[f64], n: usize, p: usize, response: &[f64]) -> Option<LeastSquares> {
    let x = DMatrix::from_row_slice(n, p, design);
    let y = DVector::from_column_slice(response);
    let gram = x.transpose() * &x;
    let chol = gram.cholesky()?;
    let beta = chol.solve(&(x.transpose() * &y));
    let residuals = y - &x * &beta;
    let gram_inverse = chol.inverse();
    Some(LeastSquares { beta: beta.iter().copied().collect(), gram_inverse, rss: residuals.dot(&residuals) })
}

/// Numerical column rank of a row-major `n × p` matrix, with singular values
/// below `rel_tol · σ_max` treated as zero.
pub(crate) fn column_rank(design: &[f64], n: usize, p: usize, rel_tol: f64) -> usize {
    let x = DMatrix::from_row_slice(n, p, design);
    let sv = x.singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}
