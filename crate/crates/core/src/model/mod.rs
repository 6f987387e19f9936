//! Covariant representations, tensor ampliations and file I/O.

mod config;
mod io;
mod representation;

pub use config::{Config, BUDGET_ENV, DEFAULT_BUDGET};
pub use io::{
    complex_from_pairs, complex_to_pairs, load_representation, parse_representation,
    representation_to_json, save_representation, RepresentationFile,
};
pub use representation::{Representation, TensorIndex, Truncation};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WoldError};
use crate::linalg::{identity, lift, mul_lifted_right, op_norm, Matrix};

/// `I_{E^{⊗k}} ⊗ a` for `dim E = d`.
pub fn tensor_lift(k: usize, a: &Matrix, d: usize, cfg: &Config) -> Result<Matrix> {
    if k == 0 {
        return Ok(a.clone());
    }
    let blocks = crate::linalg::checked_pow(d, k).unwrap_or(usize::MAX);
    cfg.lifted_size(d, k, a.nrows().max(a.ncols()))?;
    Ok(lift(blocks, a))
}

/// The iterated map `Ṽ_n : E^{⊗n}⊗H → H`; `n = 0` gives `I_H`.
pub fn iterate_v(rep: &Representation, n: usize, cfg: &Config) -> Result<Matrix> {
    Ok(iterates_v(rep, n, cfg)?.pop().expect("at least Ṽ_0"))
}

/// `[Ṽ_0, Ṽ_1, …, Ṽ_n]`.
pub fn iterates_v(rep: &Representation, n: usize, cfg: &Config) -> Result<Vec<Matrix>> {
    let d = rep.dim_e();
    let m = rep.dim_h();
    cfg.lifted_size(d, n, m)?;
    let mut out = vec![identity(m)];
    let mut blocks = 1;
    for k in 1..=n {
        let next = if k == 1 {
            rep.v().clone()
        } else {
            mul_lifted_right(&out[k - 1], blocks, rep.v())?
        };
        if cfg!(debug_assertions) && k >= 2 && next.ncols() <= 4096 {
            let other = mul_lifted_right(rep.v(), d, &out[k - 1])?;
            let scale = op_norm(rep.v()).powi(k as i32).max(1.0);
            debug_assert!((&next - other).norm() <= 1e-10 * scale * (next.ncols() as f64).sqrt());
        }
        out.push(next);
        blocks *= d;
    }
    Ok(out)
}

/// Residuals of `Ṽ(φ(a)⊗I_H) = σ(a)Ṽ` for each listed generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub holds: bool,
    pub residuals: Vec<(String, f64)>,
}

pub fn check_covariance(rep: &Representation) -> Result<CovarianceReport> {
    if rep.sigma().len() != rep.phi().len() {
        return Err(WoldError::DimensionMismatch("generator lists differ in length".into()));
    }
    let v = rep.v();
    let scale = op_norm(v);
    let mut residuals = Vec::new();
    for (label, s) in rep.sigma() {
        let p = rep.phi().get(label).ok_or_else(|| {
            WoldError::DimensionMismatch(format!("phi has no generator {label}"))
        })?;
        let lhs = v * p.kronecker(&identity(rep.dim_h()));
        let rhs = s * v;
        residuals.push((label.clone(), op_norm(&(lhs - rhs))));
    }
    let holds = residuals.iter().all(|(_, r)| *r <= 1e-9 * scale.max(f64::MIN_POSITIVE));
    Ok(CovarianceReport { holds, residuals })
}
