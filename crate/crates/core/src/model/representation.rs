use std::collections::BTreeMap;

use crate::error::{Result, WoldError};
use crate::linalg::{identity, zeros, Matrix, Subspace, TolerancePolicy};

/// Index convention for `E^{⊗n}⊗H`.
///
/// Factors are ordered left to right with the leftmost factor most significant:
/// `index(ξ⊗h) = index(ξ)·dim_H + index(h)`, and `E^{⊗n}` is indexed by base-`d`
/// digit strings. With this convention `I_{E^{⊗k}} ⊗ A` is exactly
/// `kron(I_{d^k}, A)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorIndex {
    pub dim_e: usize,
    pub dim_h: usize,
}

impl TensorIndex {
    pub fn index(&self, xi: usize, h: usize) -> usize {
        xi * self.dim_h + h
    }

    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.dim_h, idx % self.dim_h)
    }

    /// Index of `ξ_1⊗…⊗ξ_n` in `E^{⊗n}`.
    pub fn word(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &x| acc * self.dim_e + x)
    }
}

/// Marks a representation as a finite window of an infinite model.
///
/// `boundary_columns` are the coordinates of `E⊗H` whose images were cut off by
/// the truncation; `safe_depth` is the number of iterates for which the window
/// reproduces the untruncated operator on interior vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    pub boundary_columns: Vec<usize>,
    pub safe_depth: usize,
}

/// A covariant representation over `B = ℂ`, encoded by `Ṽ : E⊗H → H`.
///
/// `sigma` and `phi` hold optional generator images used only by
/// [`check_covariance`](super::check_covariance).
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    dim_e: usize,
    dim_h: usize,
    v: Matrix,
    sigma: BTreeMap<String, Matrix>,
    phi: BTreeMap<String, Matrix>,
    truncation: Option<Truncation>,
}

impl Representation {
    pub fn new(dim_e: usize, dim_h: usize, v: Matrix) -> Result<Self> {
        if dim_e == 0 || dim_h == 0 {
            return Err(WoldError::Shape("dim_E and dim_H must be positive".into()));
        }
        if v.shape() != (dim_h, dim_e * dim_h) {
            return Err(WoldError::Shape(format!(
                "V must be {}x{}, got {}x{}",
                dim_h,
                dim_e * dim_h,
                v.nrows(),
                v.ncols()
            )));
        }
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(WoldError::Parse("V contains a non-finite entry".into()));
        }
        Ok(Self { dim_e, dim_h, v, sigma: BTreeMap::new(), phi: BTreeMap::new(), truncation: None })
    }

    /// Attaches generator images; `sigma` values are `m×m`, `phi` values `d×d`, same labels.
    pub fn with_generators(
        mut self,
        sigma: BTreeMap<String, Matrix>,
        phi: BTreeMap<String, Matrix>,
    ) -> Result<Self> {
        if sigma.keys().ne(phi.keys()) {
            return Err(WoldError::DimensionMismatch(
                "sigma and phi must list the same generator labels".into(),
            ));
        }
        for (label, s) in &sigma {
            if s.shape() != (self.dim_h, self.dim_h) {
                return Err(WoldError::Shape(format!("sigma[{label}] must be {0}x{0}", self.dim_h)));
            }
        }
        for (label, p) in &phi {
            if p.shape() != (self.dim_e, self.dim_e) {
                return Err(WoldError::Shape(format!("phi[{label}] must be {0}x{0}", self.dim_e)));
            }
        }
        self.sigma = sigma;
        self.phi = phi;
        Ok(self)
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Result<Self> {
        if let Some(&c) = truncation.boundary_columns.iter().find(|&&c| c >= self.dim_e * self.dim_h) {
            return Err(WoldError::Shape(format!("boundary column {c} out of range")));
        }
        self.truncation = Some(truncation);
        Ok(self)
    }

    /// Same dimensions and truncation data, different matrix.
    pub fn with_matrix(&self, v: Matrix) -> Result<Self> {
        let mut out = Self::new(self.dim_e, self.dim_h, v)?;
        out.truncation = self.truncation.clone();
        Ok(out)
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn sigma(&self) -> &BTreeMap<String, Matrix> {
        &self.sigma
    }

    pub fn phi(&self) -> &BTreeMap<String, Matrix> {
        &self.phi
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.truncation.as_ref()
    }

    pub fn index(&self) -> TensorIndex {
        TensorIndex { dim_e: self.dim_e, dim_h: self.dim_h }
    }

    /// Interior coordinates of `E⊗H` (all of them when untruncated).
    pub fn interior_columns(&self) -> Vec<usize> {
        let n = self.dim_e * self.dim_h;
        match &self.truncation {
            None => (0..n).collect(),
            Some(t) => (0..n).filter(|c| !t.boundary_columns.contains(c)).collect(),
        }
    }

    /// `N(Ṽ)` restricted to interior coordinates.
    pub fn interior_kernel(&self, tol: &TolerancePolicy) -> Subspace {
        let cols = self.interior_columns();
        let n = self.dim_e * self.dim_h;
        let mut restricted = zeros(self.dim_h, cols.len());
        for (k, &c) in cols.iter().enumerate() {
            restricted.set_column(k, &self.v.column(c));
        }
        let kernel = Subspace::kernel(&restricted, tol);
        let mut embed = zeros(n, cols.len());
        for (k, &c) in cols.iter().enumerate() {
            embed[(c, k)] = crate::linalg::c64(1.0, 0.0);
        }
        Subspace::from_orthonormal(embed * kernel.basis())
    }

    /// Direct sum of representations over the same `E`.
    ///
    /// Block `j` occupies a contiguous range of `H`; truncation data is merged and
    /// the safe depth is the minimum over truncated summands.
    pub fn direct_sum(parts: &[Representation]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| WoldError::InvalidParams("direct sum of no summands".into()))?;
        let d = first.dim_e;
        if parts.iter().any(|p| p.dim_e != d) {
            return Err(WoldError::DimensionMismatch("summands must share dim_E".into()));
        }
        let m: usize = parts.iter().map(|p| p.dim_h).sum();
        let mut v = zeros(m, d * m);
        let mut boundary = Vec::new();
        let mut safe_depth: Option<usize> = None;
        let mut off = 0;
        for p in parts {
            let mi = p.dim_h;
            for xi in 0..d {
                for h in 0..mi {
                    let src = xi * mi + h;
                    let dst = xi * m + off + h;
                    v.view_mut((off, dst), (mi, 1)).copy_from(&p.v.column(src));
                }
            }
            if let Some(t) = &p.truncation {
                boundary.extend(t.boundary_columns.iter().map(|&c| (c / mi) * m + off + c % mi));
                safe_depth = Some(safe_depth.map_or(t.safe_depth, |s: usize| s.min(t.safe_depth)));
            }
            off += mi;
        }
        let rep = Self::new(d, m, v)?;
        match safe_depth {
            None => Ok(rep),
            Some(s) => {
                boundary.sort_unstable();
                rep.with_truncation(Truncation { boundary_columns: boundary, safe_depth: s })
            }
        }
    }

    /// Subspace of `H` occupied by summand `j` of a [`direct_sum`](Self::direct_sum).
    pub fn block_subspace(sizes: &[usize], j: usize) -> Subspace {
        let m: usize = sizes.iter().sum();
        let off: usize = sizes[..j].iter().sum();
        Subspace::coordinates(m, &(off..off + sizes[j]).collect::<Vec<_>>())
    }

    /// The identity on `H` as a (d = 1) representation.
    pub fn identity_rep(m: usize) -> Self {
        Self::new(1, m, identity(m)).expect("identity has the right shape")
    }
}
