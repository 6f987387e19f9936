//! Reduced minimum modulus, the defect operator, growth inequalities and the
//! concave / expansive tests.

mod identities;
mod inequality;

pub use identities::{
    norm_identity_residuals, telescoping_residuals, NormIdentityResidual, TelescopingResidual,
};
pub(crate) use inequality::smallest_feasible;
pub use inequality::{
    check_growth, concave_power_bound_check, growth_operator, minimal_growth_multiplier,
    minimal_growth_sequence, restricted_growth_equivalence, DivergenceNote, GrowthLevel,
    GrowthReport, GrowthRoute, GrowthShape, PowerBoundCheck, RestrictedEquivalence,
};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WoldError};
use crate::linalg::{
    hermitian_part, identity, lift, min_eigenvalue, op_norm, pinv, psd_sqrt, reduced_min_modulus,
    Matrix,
};
use crate::model::{iterate_v, iterates_v, Config, Representation};
use crate::structure::is_regular;

/// Slack on the `γ(Ṽ) ≥ 1` hypothesis.
pub const GAMMA_SLACK: f64 = 1e-10;

pub fn gamma(rep: &Representation, cfg: &Config) -> f64 {
    reduced_min_modulus(rep.v(), &cfg.tol)
}

pub fn gamma_at_least_one(rep: &Representation, cfg: &Config) -> bool {
    gamma(rep, cfg) >= 1.0 - GAMMA_SLACK
}

/// `D_Ṽ = (Ṽ*Ṽ − Ṽ†Ṽ)^{1/2}` on `E⊗H`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectOperator {
    pub d: Matrix,
}

impl DefectOperator {
    /// Largest deviation of `‖Dξ‖² − (‖Ṽξ‖² − ‖Ṽ†Ṽξ‖²)` over the standard basis.
    pub fn basis_defect(&self, v: &Matrix, cfg: &Config) -> f64 {
        let p = pinv(v, &cfg.tol) * v;
        let mut worst = 0.0f64;
        for j in 0..self.d.ncols() {
            let lhs = self.d.column(j).norm_squared();
            let rhs = v.column(j).norm_squared() - p.column(j).norm_squared();
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }
}

pub fn defect_operator(rep: &Representation, cfg: &Config) -> Result<DefectOperator> {
    let v = rep.v();
    let p = pinv(v, &cfg.tol) * v;
    let square = hermitian_part(&(v.adjoint() * v - p));
    Ok(DefectOperator { d: psd_sqrt(&square, &cfg.tol)? })
}

/// `λ_min(a) ≥ −τ_psd·max(1, ‖a‖)`.
pub(crate) fn is_psd(a: &Matrix, cfg: &Config) -> Result<(bool, f64)> {
    let min = min_eigenvalue(a)?;
    Ok((min >= -cfg.tol.psd_slack(op_norm(a)), min))
}

/// `2(I_E⊗Ṽ)*(I_E⊗Ṽ) − Ṽ₂*Ṽ₂ − I ⪰ 0`.
pub fn check_concave(rep: &Representation, cfg: &Config) -> Result<bool> {
    let d = rep.dim_e();
    let a = lift(d, rep.v());
    let v2 = iterate_v(rep, 2, cfg)?;
    let n = a.ncols();
    let op = (a.adjoint() * &a) * crate::linalg::c64(2.0, 0.0) - v2.adjoint() * &v2 - identity(n);
    Ok(is_psd(&op, cfg)?.0)
}

/// `Ṽ*Ṽ − I ⪰ 0`.
pub fn check_expansive(rep: &Representation, cfg: &Config) -> Result<bool> {
    let v = rep.v();
    let op = v.adjoint() * v - identity(v.ncols());
    Ok(is_psd(&op, cfg)?.0)
}

/// `γ(Ṽ_n)` against `γ(Ṽ)^n` for one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaProductLevel {
    pub n: usize,
    pub gamma_n: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `γ(Ṽ_n) ≥ γ(Ṽ)^n` for `n ≤ n_max`; the lifted factors `I⊗Ṽ` share the
/// singular values of `Ṽ`, so each factor contributes `γ(Ṽ)`.
pub fn gamma_product_bound_check(
    rep: &Representation,
    n_max: usize,
    cfg: &Config,
) -> Result<Vec<GammaProductLevel>> {
    if !is_regular(rep, cfg)?.is_regular() {
        return Err(WoldError::NotRegular);
    }
    let g = gamma(rep, cfg);
    let its = iterates_v(rep, n_max, cfg)?;
    Ok(its
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, a)| {
            let gamma_n = reduced_min_modulus(a, &cfg.tol);
            let bound = g.powi(n as i32);
            let holds = gamma_n >= bound - 1e-8 * bound.max(1.0);
            GammaProductLevel { n, gamma_n, bound, holds }
        })
        .collect())
}
