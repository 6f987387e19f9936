use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WoldError};
use crate::growth::smallest_feasible;
use crate::linalg::{
    c64, checked_pow, hermitian_part, identity, lift, min_eigenvalue, op_norm, reduced_min_modulus, zeros,
    Matrix, Subspace,
};
use crate::model::{Config, Representation, Truncation};

/// Weighted shift on the Fock levels `⊕_{k≤L} E^{⊗k}⊗ℂ^p` with weights `Z_1..Z_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnilateralSpec {
    pub d: usize,
    /// Top Fock level `L`.
    pub levels: usize,
    pub p: usize,
    /// `z[k-1] = Z_k`, a `d^k × d^k` matrix.
    pub z: Vec<Matrix>,
}

impl UnilateralSpec {
    pub fn new(d: usize, levels: usize, p: usize, z: Vec<Matrix>) -> Result<Self> {
        if d == 0 || p == 0 || levels == 0 {
            return Err(WoldError::InvalidParams("d, L and p must be positive".into()));
        }
        if z.len() != levels {
            return Err(WoldError::Parse(format!("expected {levels} weight matrices, found {}", z.len())));
        }
        for (k, zk) in z.iter().enumerate() {
            let size = checked_pow(d, k + 1)
                .ok_or_else(|| WoldError::InvalidParams("d^k overflows".into()))?;
            if zk.shape() != (size, size) {
                return Err(WoldError::Shape(format!("Z_{} must be {size}x{size}", k + 1)));
            }
        }
        Ok(Self { d, levels, p, z })
    }

    /// Identity weights: the unweighted Fock shift.
    pub fn unweighted(d: usize, levels: usize, p: usize) -> Result<Self> {
        let z = (1..=levels)
            .map(|k| checked_pow(d, k).map(identity).ok_or_else(|| WoldError::InvalidParams("d^k overflows".into())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, levels, p, z)
    }

    /// `d = 1` with scalar weights `z_k`.
    pub fn scalar(levels: usize, p: usize, weights: &[f64]) -> Result<Self> {
        let z = weights.iter().map(|&w| Matrix::from_element(1, 1, c64(w, 0.0))).collect();
        Self::new(1, levels, p, z)
    }

    /// Offsets of the level blocks inside `H`, plus the total dimension last.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.levels + 2);
        let mut off = 0;
        for k in 0..=self.levels {
            out.push(off);
            off += self.d.pow(k as u32) * self.p;
        }
        out.push(off);
        out
    }

    pub fn dim_h(&self) -> usize {
        *self.offsets().last().expect("nonempty")
    }

    /// Coordinates of the levels `0..top` (exclusive) inside `H`.
    pub fn levels_below(&self, top: usize) -> Subspace {
        let offs = self.offsets();
        Subspace::coordinates(self.dim_h(), &(0..offs[top.min(self.levels + 1)]).collect::<Vec<_>>())
    }
}

/// Level `k` of `E⊗(E^{⊗k}⊗ℂ^p)` is sent to level `k+1` by `Z_{k+1}⊗I_p`;
/// the top level is sent to zero and marked as the truncation boundary.
pub fn build_unilateral_shift(spec: &UnilateralSpec, cfg: &Config) -> Result<Representation> {
    let d = spec.d;
    let p = spec.p;
    let total = (0..=spec.levels)
        .try_fold(0usize, |acc, k| checked_pow(d, k)?.checked_mul(p)?.checked_add(acc))
        .unwrap_or(usize::MAX);
    cfg.check_columns(d.saturating_mul(total))?;
    let offs = spec.offsets();
    let mut v = zeros(total, d * total);
    let mut boundary = Vec::new();
    for k in 0..=spec.levels {
        let width = d.pow(k as u32);
        for xi in 0..d {
            for eta in 0..width {
                for q in 0..p {
                    let col = xi * total + offs[k] + eta * p + q;
                    if k == spec.levels {
                        boundary.push(col);
                        continue;
                    }
                    let zk = &spec.z[k];
                    let src = xi * width + eta;
                    for r in 0..zk.nrows() {
                        v[(offs[k + 1] + r * p + q, col)] = zk[(r, src)];
                    }
                }
            }
        }
    }
    boundary.sort_unstable();
    Representation::new(d, total, v)?
        .with_truncation(Truncation { boundary_columns: boundary, safe_depth: spec.levels })
}

/// `Z^{(n)} = Z_n(I_E⊗Z_{n−1})⋯(I_{E^{⊗n−1}}⊗Z_1)`, with `Z^{(0)} = I_1`.
pub fn z_product(spec: &UnilateralSpec, n: usize) -> Result<Matrix> {
    if n > spec.levels {
        return Err(WoldError::InvalidParams(format!("n = {n} exceeds L = {}", spec.levels)));
    }
    let mut acc = identity(1);
    for k in 1..=n {
        acc = &spec.z[k - 1] * lift(spec.d, &acc);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnilateralPair {
    pub k: usize,
    pub n: usize,
    /// Smallest `d_k ≥ 0` making the pair hold, `None` when none does.
    pub minimal_d: Option<f64>,
    pub supplied_holds: Option<bool>,
    /// `λ_min(d_k·RHS − LHS)` at the supplied multiplier.
    pub psd_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnilateralLevel {
    pub k: usize,
    /// Maximum of the per-pair minima; `None` if some pair is infeasible.
    pub minimal_d: Option<f64>,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnilateralConditionReport {
    pub pairs: Vec<UnilateralPair>,
    pub levels: Vec<UnilateralLevel>,
    /// `γ(Z_n) ≥ 1` for each `n = 1..=L`.
    pub gamma_ok: Vec<bool>,
    /// Pairs inside `(k_max, n_max)` that need `Z_j` with `j > L`.
    pub skipped: usize,
}

impl UnilateralConditionReport {
    pub fn feasible(&self) -> bool {
        self.levels.iter().all(|l| l.minimal_d.is_some())
    }

    pub fn minimal_sequence(&self) -> Vec<Option<f64>> {
        self.levels.iter().map(|l| l.minimal_d).collect()
    }

    pub fn supplied_all_hold(&self) -> Option<bool> {
        self.pairs.iter().map(|p| p.supplied_holds).collect::<Option<Vec<_>>>().map(|v| v.iter().all(|&b| b))
    }
}

/// Both sides of the operator inequality at one `(k, n)`:
/// `LHS = (I_{E^{⊗k}}⊗Z^{(n)})^{-*}Z^{(k+n)*}Z^{(k+n)}(I_{E^{⊗k}}⊗Z^{(n)})^{-1} − I` and
/// `RHS = I_{E^{⊗k−1}}⊗((I_E⊗Z^{(n)})^{-*}Z^{(1+n)*}Z^{(1+n)}(I_E⊗Z^{(n)})^{-1}) − I`.
fn pair_sides(spec: &UnilateralSpec, products: &[Matrix], inverses: &[Matrix], k: usize, n: usize) -> (Matrix, Matrix) {
    let d = spec.d;
    let gram = |a: &Matrix| a.adjoint() * a;
    let inv_k = lift(d.pow(k as u32), &inverses[n]);
    let left = inv_k.adjoint() * gram(&products[k + n]) * &inv_k;
    let inv_1 = lift(d, &inverses[n]);
    let inner = inv_1.adjoint() * gram(&products[1 + n]) * &inv_1;
    let right = lift(d.pow(k as u32 - 1), &inner);
    let size = left.nrows();
    (hermitian_part(&(left - identity(size))), hermitian_part(&(right - identity(size))))
}

/// `d·RHS − LHS ⪰ 0` with a slack far below the PSD tolerance, since these
/// matrices are small and exact up to rounding.
fn pair_holds(lhs: &Matrix, rhs: &Matrix, d: f64) -> Result<(bool, f64)> {
    let op = rhs * c64(d, 0.0) - lhs;
    let min = min_eigenvalue(&op)?;
    let scale = op_norm(lhs).max(d * op_norm(rhs)).max(1.0);
    Ok((min >= -1e-12 * scale, min))
}

/// Checks the inequality for `1 ≤ k ≤ k_max`, `0 ≤ n ≤ n_max`, `k + n ≤ L`.
/// `d_seq[k-1]` is the supplied `d_k`.
pub fn check_unilateral_weight_condition(
    spec: &UnilateralSpec,
    d_seq: Option<&[f64]>,
    k_max: usize,
    n_max: usize,
    cfg: &Config,
) -> Result<UnilateralConditionReport> {
    let l = spec.levels;
    for (k, zk) in spec.z.iter().enumerate() {
        if reduced_min_modulus(zk, &cfg.tol) == 0.0 || !Subspace::kernel(zk, &cfg.tol).is_zero() {
            return Err(WoldError::NotInvertible { index: k + 1 });
        }
    }
    let reach = k_max.min(l);
    cfg.check_columns(checked_pow(spec.d, reach).unwrap_or(usize::MAX))?;
    let gamma_ok = spec.z.iter().map(|zk| reduced_min_modulus(zk, &cfg.tol) >= 1.0 - 1e-10).collect();
    let products = (0..=l).map(|n| z_product(spec, n)).collect::<Result<Vec<_>>>()?;
    let inverses = products
        .iter()
        .enumerate()
        .map(|(n, a)| a.clone().try_inverse().ok_or(WoldError::NotInvertible { index: n }))
        .collect::<Result<Vec<_>>>()?;

    let mut grid = Vec::new();
    let mut skipped = 0;
    for k in 1..=k_max {
        for n in 0..=n_max {
            if k + n <= l {
                grid.push((k, n));
            } else {
                skipped += 1;
            }
        }
    }
    let pairs = grid
        .par_iter()
        .map(|&(k, n)| {
            let (lhs, rhs) = pair_sides(spec, &products, &inverses, k, n);
            let minimal_d = smallest_feasible(|t| Ok(pair_holds(&lhs, &rhs, t)?.0))?;
            let supplied = d_seq.and_then(|s| s.get(k - 1)).copied();
            let (supplied_holds, psd_residual) = match supplied {
                Some(dk) => {
                    let (ok, min) = pair_holds(&lhs, &rhs, dk)?;
                    (Some(ok), Some(min))
                }
                None => (None, None),
            };
            Ok(UnilateralPair { k, n, minimal_d, supplied_holds, psd_residual })
        })
        .collect::<Result<Vec<_>>>()?;
    let levels = (1..=k_max)
        .filter(|k| pairs.iter().any(|p| p.k == *k))
        .map(|k| {
            let own: Vec<&UnilateralPair> = pairs.iter().filter(|p| p.k == k).collect();
            let minimal_d = own
                .iter()
                .map(|p| p.minimal_d)
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.into_iter().fold(0.0, f64::max));
            UnilateralLevel { k, minimal_d, pairs: own.len() }
        })
        .collect();
    Ok(UnilateralConditionReport { pairs, levels, gamma_ok, skipped })
}
