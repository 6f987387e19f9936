use nalgebra::QR;

use super::{decomp::{svd_info, svd_info_scaled}, identity, lift, zeros, Matrix, TolerancePolicy, C64};
use crate::error::{Result, WoldError};

/// A subspace of `ℂ^ambient`, stored as an orthonormal basis (one column per vector).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self { basis: zeros(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Self { basis: identity(ambient) }
    }

    /// Span of the standard basis vectors with the given indices.
    pub fn coordinates(ambient: usize, indices: &[usize]) -> Self {
        let mut basis = zeros(ambient, indices.len());
        for (k, &i) in indices.iter().enumerate() {
            basis[(i, k)] = super::c64(1.0, 0.0);
        }
        Self { basis }
    }

    /// Wraps a basis that is already orthonormal.
    ///
    /// The caller is trusted; use [`Subspace::span`] for arbitrary spanning sets.
    pub fn from_orthonormal(basis: Matrix) -> Self {
        Self { basis }
    }

    /// Column space of `a`.
    pub fn range(a: &Matrix, tol: &TolerancePolicy) -> Self {
        let info = svd_info(a, tol);
        Self { basis: info.u.columns(0, info.rank).into_owned() }
    }

    /// Span of the columns of `vectors` (same as [`Subspace::range`]).
    pub fn span(vectors: &Matrix, tol: &TolerancePolicy) -> Self {
        Self::range(vectors, tol)
    }

    /// Range of `a` with the rank cutoff measured against `max(‖a‖, scale)`.
    pub fn range_scaled(a: &Matrix, tol: &TolerancePolicy, scale: f64) -> Self {
        let info = svd_info_scaled(a, tol, scale);
        Self { basis: info.u.columns(0, info.rank).into_owned() }
    }

    /// Null space of `a` with the cutoff measured against `max(‖a‖, scale)`; use when
    /// `a` is a difference like `I − E` whose entries may be pure rounding noise.
    pub fn kernel_scaled(a: &Matrix, tol: &TolerancePolicy, scale: f64) -> Self {
        Self::range_scaled(&a.adjoint(), tol, scale).complement()
    }

    /// Null space of `a`, as the complement of the range of `a*`.
    pub fn kernel(a: &Matrix, tol: &TolerancePolicy) -> Self {
        Self::range(&a.adjoint(), tol).complement()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn into_basis(self) -> Matrix {
        self.basis
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.adjoint()
    }

    /// Orthogonal projection of the columns of `v`.
    pub fn project(&self, v: &Matrix) -> Result<Matrix> {
        self.check_ambient_rows(v)?;
        Ok(&self.basis * (self.basis.adjoint() * v))
    }

    /// `v - P v`, the component orthogonal to the subspace.
    pub fn reject(&self, v: &Matrix) -> Result<Matrix> {
        self.check_ambient_rows(v)?;
        Ok(v - &self.basis * (self.basis.adjoint() * v))
    }

    /// Orthogonal complement in the ambient space.
    pub fn complement(&self) -> Self {
        let n = self.ambient();
        let k = self.dim();
        if k == 0 {
            return Self::full(n);
        }
        if k >= n {
            return Self::zero(n);
        }
        let qr = QR::new(self.basis.clone());
        let mut q_adj = identity(n);
        qr.q_tr_mul(&mut q_adj);
        let q = q_adj.adjoint();
        Self { basis: q.columns(k, n - k).into_owned() }
    }

    /// `self ∩ other`, returned as a subspace of `other`.
    ///
    /// A direction of `other` belongs to the intersection when its distance to
    /// `self` is at most `τ_sub`.
    pub fn intersect(&self, other: &Self, tol: &TolerancePolicy) -> Result<Self> {
        self.check_same_ambient(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(self.ambient()));
        }
        let k2 = other.dim();
        let mut residual = self.reject(&self.reject(&other.basis)?)?;
        if residual.nrows() < k2 {
            // Pad so the thin SVD returns a full set of right singular vectors.
            residual = residual.resize_vertically(k2, C64::new(0.0, 0.0));
        }
        let info = svd_info(&residual, &TolerancePolicy { rank: 0.0, ..*tol });
        // Right singular vectors of the residual with (near) zero singular value.
        let mut picked = Vec::new();
        for j in 0..k2 {
            let s = info.singular_values.get(j).copied().unwrap_or(0.0);
            if s <= tol.sub {
                picked.push(j);
            }
        }
        let mut coeffs = zeros(k2, picked.len());
        for (col, &j) in picked.iter().enumerate() {
            coeffs.set_column(col, &info.v_t.row(j).adjoint());
        }
        let vectors = &other.basis * coeffs;
        Ok(Self { basis: orthonormalize(&vectors) })
    }

    /// `self + other`.
    pub fn sum(&self, other: &Self, tol: &TolerancePolicy) -> Result<Self> {
        self.check_same_ambient(other)?;
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        let residual = self.reject(&self.reject(&other.basis)?)?;
        let info = svd_info(&residual, &TolerancePolicy { rank: 0.0, ..*tol });
        let extra: Vec<usize> =
            (0..info.singular_values.len()).filter(|&j| info.singular_values[j] > tol.sub).collect();
        let mut basis = zeros(self.ambient(), self.dim() + extra.len());
        basis.columns_mut(0, self.dim()).copy_from(&self.basis);
        for (k, &j) in extra.iter().enumerate() {
            basis.set_column(self.dim() + k, &info.u.column(j));
        }
        // A second orthogonalization pass keeps the new directions clean.
        let tail = basis.columns(self.dim(), extra.len()).into_owned();
        let tail = self.reject(&tail)?;
        basis.columns_mut(self.dim(), extra.len()).copy_from(&orthonormalize(&tail));
        Ok(Self { basis })
    }

    /// Largest distance from a basis vector of `self` to `other`.
    pub fn residual_outside(&self, other: &Self) -> Result<f64> {
        self.check_same_ambient(other)?;
        let r = other.reject(&self.basis)?;
        Ok(r.column_iter().map(|c| c.norm()).fold(0.0, f64::max))
    }

    /// `self ⊆ other`, decided column by column against `τ_sub`.
    pub fn is_within(&self, other: &Self, tol: &TolerancePolicy) -> Result<bool> {
        Ok(self.residual_outside(other)? <= tol.sub)
    }

    /// Mutual containment.
    pub fn same_as(&self, other: &Self, tol: &TolerancePolicy) -> Result<bool> {
        Ok(self.dim() == other.dim() && self.is_within(other, tol)? && other.is_within(self, tol)?)
    }

    /// Largest overlap `|⟨x, y⟩|` between unit vectors of the two subspaces.
    pub fn max_overlap(&self, other: &Self) -> Result<f64> {
        self.check_same_ambient(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(0.0);
        }
        Ok(super::op_norm(&(self.basis.adjoint() * &other.basis)))
    }

    pub fn is_orthogonal_to(&self, other: &Self, tol: &TolerancePolicy) -> Result<bool> {
        Ok(self.max_overlap(other)? <= tol.sub)
    }

    /// `ℂ^blocks ⊗ self`, i.e. `blocks` stacked copies.
    pub fn lift(&self, blocks: usize) -> Self {
        Self { basis: lift(blocks, &self.basis) }
    }

    /// Image `a(self)`.
    pub fn image(&self, a: &Matrix, tol: &TolerancePolicy) -> Result<Self> {
        if a.ncols() != self.ambient() {
            return Err(WoldError::DimensionMismatch(format!(
                "operator has {} columns, subspace lives in dimension {}",
                a.ncols(),
                self.ambient()
            )));
        }
        if self.is_zero() {
            return Ok(Self::zero(a.nrows()));
        }
        let info = svd_info_scaled(&(a * &self.basis), tol, super::op_norm(a));
        Ok(Self { basis: info.u.columns(0, info.rank).into_owned() })
    }

    /// Orthonormality defect `‖Q*Q - I‖`.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.basis.adjoint() * &self.basis - identity(self.dim())).norm()
    }

    fn check_same_ambient(&self, other: &Self) -> Result<()> {
        if self.ambient() != other.ambient() {
            return Err(WoldError::DimensionMismatch(format!(
                "subspaces of dimension {} and {}",
                self.ambient(),
                other.ambient()
            )));
        }
        Ok(())
    }

    fn check_ambient_rows(&self, v: &Matrix) -> Result<()> {
        if v.nrows() != self.ambient() {
            return Err(WoldError::DimensionMismatch(format!(
                "vectors of length {}, subspace ambient {}",
                v.nrows(),
                self.ambient()
            )));
        }
        Ok(())
    }
}

/// Orthonormal basis for the span of linearly independent columns.
fn orthonormalize(vectors: &Matrix) -> Matrix {
    if vectors.ncols() == 0 {
        return vectors.clone();
    }
    super::decomp::thin_svd(vectors).0.columns(0, vectors.ncols()).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, from_real_rows};

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn complement_is_orthogonal_and_fills() {
        let a = Matrix::from_fn(6, 2, |i, j| c64((i + 2 * j) as f64, (i * j) as f64 - 1.0));
        let s = Subspace::range(&a, &tol());
        let c = s.complement();
        assert_eq!(c.dim(), 4);
        assert!(c.orthonormality_defect() < 1e-12);
        assert!(s.max_overlap(&c).unwrap() < 1e-12);
        let all = s.sum(&c, &tol()).unwrap();
        assert_eq!(all.dim(), 6);
    }

    #[test]
    fn kernel_of_projection() {
        let a = from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let k = Subspace::kernel(&a, &tol());
        assert_eq!(k.dim(), 1);
        assert!(k.same_as(&Subspace::coordinates(3, &[2]), &tol()).unwrap());
    }

    #[test]
    fn intersection_of_coordinate_planes() {
        let s1 = Subspace::coordinates(4, &[0, 1, 2]);
        let s2 = Subspace::coordinates(4, &[1, 2, 3]);
        let i = s1.intersect(&s2, &tol()).unwrap();
        assert_eq!(i.dim(), 2);
        assert!(i.same_as(&Subspace::coordinates(4, &[1, 2]), &tol()).unwrap());
        assert_eq!(s1.sum(&s2, &tol()).unwrap().dim(), 4);
    }

    #[test]
    fn containment_is_directional() {
        let line = Subspace::coordinates(3, &[0]);
        let plane = Subspace::coordinates(3, &[0, 1]);
        assert!(line.is_within(&plane, &tol()).unwrap());
        assert!(!plane.is_within(&line, &tol()).unwrap());
    }

    #[test]
    fn mismatched_ambient_is_rejected() {
        let a = Subspace::full(2);
        let b = Subspace::full(3);
        assert!(matches!(a.sum(&b, &tol()), Err(WoldError::DimensionMismatch(_))));
    }
}
