//! Dense complex linear algebra on top of `nalgebra`.
//!
//! Everything here works on [`Matrix`], a dynamically sized complex matrix.
//! Rank decisions go through a single relative cutoff (see
//! [`TolerancePolicy::rank_cutoff`]) so that `pinv`, `range`, `kernel` and the
//! reduced minimum modulus always agree on what the numerical rank is.

mod decomp;
mod subspace;
mod tolerance;

pub use decomp::{
    hermitian_eigen, min_eigenvalue, pinv, psd_sqrt, penrose_residuals, rank_warning, reduced_min_modulus, svd_info, svd_info_scaled, thin_svd,
    HermitianEigen, RankWarning, SvdInfo,
};
pub use subspace::Subspace;
pub use tolerance::TolerancePolicy;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, WoldError};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> Matrix {
    Matrix::zeros(rows, cols)
}

/// Builds a matrix from real entries given row by row.
pub fn from_real_rows(rows: &[&[f64]]) -> Matrix {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    Matrix::from_fn(r, c, |i, j| c64(rows[i][j], 0.0))
}

pub fn real_diag(values: &[f64]) -> Matrix {
    let n = values.len();
    Matrix::from_fn(n, n, |i, j| if i == j { c64(values[i], 0.0) } else { C64::default() })
}

/// Kronecker product with the left factor most significant.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// `I_blocks ⊗ a`.
pub fn lift(blocks: usize, a: &Matrix) -> Matrix {
    let (r, c) = a.shape();
    let mut out = zeros(blocks * r, blocks * c);
    for k in 0..blocks {
        out.view_mut((k * r, k * c), (r, c)).copy_from(a);
    }
    out
}

/// Computes `a · (I_blocks ⊗ b)` without forming the Kronecker product.
pub fn mul_lifted_right(a: &Matrix, blocks: usize, b: &Matrix) -> Result<Matrix> {
    let (br, bc) = b.shape();
    if a.ncols() != blocks * br {
        return Err(WoldError::DimensionMismatch(format!(
            "left factor has {} columns, lifted operator has {} rows",
            a.ncols(),
            blocks * br
        )));
    }
    let mut out = zeros(a.nrows(), blocks * bc);
    for k in 0..blocks {
        let prod = a.columns(k * br, br) * b;
        out.columns_mut(k * bc, bc).copy_from(&prod);
    }
    Ok(out)
}

/// Computes `(I_blocks ⊗ b) · a` without forming the Kronecker product.
pub fn mul_lifted_left(blocks: usize, b: &Matrix, a: &Matrix) -> Result<Matrix> {
    let (br, bc) = b.shape();
    if a.nrows() != blocks * bc {
        return Err(WoldError::DimensionMismatch(format!(
            "lifted operator has {} columns, right factor has {} rows",
            blocks * bc,
            a.nrows()
        )));
    }
    let mut out = zeros(blocks * br, a.ncols());
    for k in 0..blocks {
        let prod = b * a.rows(k * bc, bc);
        out.rows_mut(k * br, br).copy_from(&prod);
    }
    Ok(out)
}

/// Spectral norm (largest singular value).
pub fn op_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    // Largest eigenvalue of the smaller Gram matrix; accurate to rounding
    // relative to the norm itself, and much cheaper than a checked SVD.
    let gram = if a.nrows() <= a.ncols() { a * a.adjoint() } else { a.adjoint() * a };
    match decomp::self_adjoint_eigenvalues(&gram).ok().and_then(|v| v.last().copied()) {
        Some(top) => top.max(0.0).sqrt(),
        // Frobenius norm bounds the spectral norm from above.
        None => a.norm(),
    }
}

pub fn fro_norm(a: &Matrix) -> f64 {
    a.norm()
}

/// `(a + a*) / 2`.
pub fn hermitian_part(a: &Matrix) -> Matrix {
    (a + a.adjoint()) * c64(0.5, 0.0)
}

pub fn check_square(a: &Matrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(WoldError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

pub fn check_same_shape(a: &Matrix, b: &Matrix, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(WoldError::DimensionMismatch(format!(
            "{what}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Direct sum `a ⊕ b`.
pub fn block_diag(blocks: &[Matrix]) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// `d^n`, or `None` on overflow.
pub fn checked_pow(d: usize, n: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..n {
        acc = acc.checked_mul(d)?;
    }
    Some(acc)
}
