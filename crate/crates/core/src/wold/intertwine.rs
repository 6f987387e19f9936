use serde::{Deserialize, Serialize};

use super::{generated_subspace, wandering_space};
use crate::error::{Result, WoldError};
use crate::linalg::{checked_pow, lift, op_norm, pinv, Matrix, Subspace};
use crate::model::{iterates_v, Config, Representation};
use crate::structure::translate;

/// `Ṽ' = Ṽ(Ṽ*Ṽ)^{-1}`.
///
/// A truncated representation whose kernel sits entirely on the boundary
/// columns gets `Ṽ(Ṽ*Ṽ)†` instead and keeps its truncation.
pub fn cauchy_dual(rep: &Representation, cfg: &Config) -> Result<Representation> {
    let v = rep.v();
    let gram = v.adjoint() * v;
    if Subspace::kernel(v, &cfg.tol).is_zero() {
        let inv = gram.clone().try_inverse().ok_or(WoldError::NotLeftInvertible)?;
        return rep.with_matrix(v * inv);
    }
    if rep.truncation().is_some() && rep.interior_kernel(&cfg.tol).is_zero() {
        return rep.with_matrix(v * pinv(&gram, &cfg.tol));
    }
    Err(WoldError::NotLeftInvertible)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntertwinerCheck {
    pub residual: f64,
    pub holds: bool,
}

/// `AṼ = Ṽ(I_E⊗A)` up to `1e-9·‖A‖·‖Ṽ‖`.
pub fn check_intertwiner(rep: &Representation, a: &Matrix) -> Result<IntertwinerCheck> {
    let m = rep.dim_h();
    if a.shape() != (m, m) {
        return Err(WoldError::DimensionMismatch(format!("A must be {m}x{m}")));
    }
    let v = rep.v();
    let residual = op_norm(&(a * v - v * lift(rep.dim_e(), a)));
    let holds = residual <= 1e-9 * (op_norm(a) * op_norm(v)).max(f64::MIN_POSITIVE);
    Ok(IntertwinerCheck { residual, holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurityVerdict {
    Pure,
    NotPure,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub verdict: PurityVerdict,
    /// Smallest `‖A^{2^j}‖^{1/2^j}` seen, an upper bound on the spectral radius.
    pub spectral_bound: f64,
    /// `‖A^k A*^k‖` at `k = 2^j`, `j = 0, 1, ...`.
    pub tail_norms: Vec<f64>,
}

/// Decides whether `A^n A*^n → 0` by repeated squaring up to `n ≥ horizon`.
pub fn is_pure_contraction(a: &Matrix, horizon: usize, tol: f64) -> Result<PurityReport> {
    if !a.is_square() {
        return Err(WoldError::Shape("A must be square".into()));
    }
    let norm = op_norm(a);
    if norm > 1.0 + 1e-10 {
        return Err(WoldError::NotContraction { norm });
    }
    let squarings = horizon.max(2).next_power_of_two().trailing_zeros() as usize;
    let mut power = a.clone();
    let mut spectral_bound = norm;
    let mut tail_norms = Vec::with_capacity(squarings + 1);
    for j in 0..=squarings {
        let p = op_norm(&power);
        spectral_bound = spectral_bound.min(p.powf(1.0 / (1u64 << j) as f64));
        if spectral_bound < 1.0 - tol {
            return Ok(PurityReport { verdict: PurityVerdict::Pure, spectral_bound, tail_norms });
        }
        tail_norms.push(op_norm(&(&power * power.adjoint())));
        if j < squarings {
            power = &power * &power;
        }
    }
    let last = *tail_norms.last().expect("at least one level");
    let verdict = if last <= tol {
        PurityVerdict::Pure
    } else if settled(&tail_norms, tol) {
        PurityVerdict::NotPure
    } else {
        PurityVerdict::Undecided
    };
    Ok(PurityReport { verdict, spectral_bound, tail_norms })
}

/// The last increments are below `tol` and not growing.
fn settled(s: &[f64], tol: f64) -> bool {
    let n = s.len();
    if n < 3 {
        return n == 2 && (s[0] - s[1]).abs() < tol;
    }
    let last = (s[n - 2] - s[n - 1]).abs();
    let before = (s[n - 3] - s[n - 2]).abs();
    last < tol && last <= before + tol * 1e-3
}

/// Purity of `A` against purity of its compression to `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureEquivalenceReport {
    pub operator: PurityReport,
    pub compression: PurityReport,
    pub decided: bool,
    /// Both sides decided and different.
    pub violation: bool,
}

/// Requires a Cauchy dual, `[W] = H` under both the representation and its
/// dual, and `A` intertwining the representation.
pub fn pure_equivalence_harness(
    rep: &Representation,
    a: &Matrix,
    horizon: usize,
    cfg: &Config,
) -> Result<PureEquivalenceReport> {
    let dual = cauchy_dual(rep, cfg)
        .map_err(|_| WoldError::PreconditionFailed("no left inverse, so no Cauchy dual".into()))?;
    let m = rep.dim_h();
    let w = wandering_space(rep, cfg);
    if generated_subspace(rep, &w, cfg)?.dim() != m {
        return Err(WoldError::PreconditionFailed("[W] does not exhaust H".into()));
    }
    if generated_subspace(&dual, &w, cfg)?.dim() != m {
        return Err(WoldError::PreconditionFailed("[W] under the Cauchy dual does not exhaust H".into()));
    }
    if !check_intertwiner(rep, a)?.holds {
        return Err(WoldError::PreconditionFailed("A does not intertwine the representation".into()));
    }
    let tol = 1e-9;
    let operator = is_pure_contraction(a, horizon, tol)?;
    let q = w.basis();
    let compression = is_pure_contraction(&(q.adjoint() * a * q), horizon, tol)?;
    let decided = operator.verdict != PurityVerdict::Undecided && compression.verdict != PurityVerdict::Undecided;
    let violation = decided && operator.verdict != compression.verdict;
    Ok(PureEquivalenceReport { operator, compression, decided, violation })
}

/// A nonzero `h₁ ∈ K` with `Ṽ*h₁ ∈ E⊗K^⊥`, found as the `K` component of the
/// first Cauchy-dual translate of `W` that is not orthogonal to `K`.
#[derive(Debug, Clone)]
pub struct InvariantWitness {
    pub level: usize,
    pub h1: Matrix,
    /// Norm of the part of `Ṽ*h₁` outside `E⊗K^⊥`, relative to `‖h₁‖`.
    pub residual: f64,
}

pub fn invariant_witness(rep: &Representation, k: &Subspace, cfg: &Config) -> Result<InvariantWitness> {
    let tol = &cfg.tol;
    let m = rep.dim_h();
    let d = rep.dim_e();
    if k.ambient() != m || k.is_zero() || k.dim() == m {
        return Err(WoldError::InvalidParams("K must be a nontrivial proper subspace of H".into()));
    }
    if translate(rep, k, cfg)?.residual_outside(k)? > tol.sub {
        return Err(WoldError::PreconditionFailed("K is not invariant".into()));
    }
    let w = wandering_space(rep, cfg);
    if w.residual_outside(&k.complement())? > tol.sub {
        return Err(WoldError::PreconditionFailed("W is not orthogonal to K".into()));
    }
    let dual = cauchy_dual(rep, cfg)?;
    let reach = cfg.max_level(d, m).min(m + 1);
    let its = iterates_v(&dual, reach, cfg)?;
    for (n, vn) in its.iter().enumerate().skip(1) {
        let blocks = checked_pow(d, n).expect("within budget");
        let source = w.lift(blocks);
        let hit = k.basis().adjoint() * vn * source.basis();
        if hit.ncols() == 0 || op_norm(&hit) <= tol.sub * op_norm(vn).max(1.0) {
            continue;
        }
        let info = crate::linalg::svd_info(&hit, tol);
        let h1 = k.basis() * info.u.columns(0, 1) * crate::linalg::c64(info.sigma_max(), 0.0);
        let image = rep.v().adjoint() * &h1;
        let inside = k.lift(d).project(&image)?;
        let residual = inside.norm() / h1.norm();
        return Ok(InvariantWitness { level: n, h1, residual });
    }
    Err(WoldError::Inconsistent("every dual translate of W is orthogonal to K".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, from_real_rows, identity, real_diag};
    use crate::model::Truncation;

    fn cfg() -> Config {
        Config::default()
    }

    fn weighted_shift(weights: &[f64]) -> Representation {
        let n = weights.len() + 1;
        let v = Matrix::from_fn(n, n, |i, j| if i == j + 1 { c64(weights[j], 0.0) } else { c64(0.0, 0.0) });
        Representation::new(1, n, v)
            .unwrap()
            .with_truncation(Truncation { boundary_columns: vec![n - 1], safe_depth: n - 1 })
            .unwrap()
    }

    #[test]
    fn cauchy_dual_examples() {
        let two = Representation::new(1, 1, real_diag(&[2.0])).unwrap();
        assert!((cauchy_dual(&two, &cfg()).unwrap().v()[(0, 0)].re - 0.5).abs() < 1e-15);
        let rot = Representation::new(1, 2, from_real_rows(&[&[0.6, -0.8], &[0.8, 0.6]])).unwrap();
        assert!((cauchy_dual(&rot, &cfg()).unwrap().v() - rot.v()).norm() < 1e-14);
        let li = Representation::new(1, 2, from_real_rows(&[&[2.0, 1.0], &[0.0, 3.0]])).unwrap();
        let dd = cauchy_dual(&cauchy_dual(&li, &cfg()).unwrap(), &cfg()).unwrap();
        assert!((dd.v() - li.v()).norm() < 1e-12);
        let nil = Representation::new(1, 2, from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(cauchy_dual(&nil, &cfg()).unwrap_err(), WoldError::NotLeftInvertible);
        let trunc = weighted_shift(&[2.0, 4.0]);
        let dual = cauchy_dual(&trunc, &cfg()).unwrap();
        assert!((dual.v()[(1, 0)].re - 0.5).abs() < 1e-14 && (dual.v()[(2, 1)].re - 0.25).abs() < 1e-14);
        assert!(dual.truncation().is_some());
    }

    #[test]
    fn intertwiners() {
        let rep = weighted_shift(&[1.0, 1.0, 1.0]);
        assert!(check_intertwiner(&rep, &identity(4)).unwrap().holds);
        let t = rep.v().clone();
        let p = identity(4) * c64(0.3, 0.0) + &t * c64(0.2, 0.0) + &t * &t * c64(-0.1, 0.0);
        assert!(check_intertwiner(&rep, &p).unwrap().holds);
        assert!(!check_intertwiner(&rep, &real_diag(&[1.0, 2.0, 3.0, 4.0])).unwrap().holds);
    }

    #[test]
    fn purity_examples() {
        assert_eq!(is_pure_contraction(&Matrix::zeros(3, 3), 64, 1e-9).unwrap().verdict, PurityVerdict::Pure);
        assert_eq!(is_pure_contraction(&identity(3), 64, 1e-9).unwrap().verdict, PurityVerdict::NotPure);
        let s = weighted_shift(&[1.0, 1.0, 1.0]).v() * c64(0.9, 0.0);
        assert_eq!(is_pure_contraction(&s, 64, 1e-9).unwrap().verdict, PurityVerdict::Pure);
        let unshifted = weighted_shift(&[1.0, 1.0, 1.0]).v().clone();
        assert_eq!(is_pure_contraction(&unshifted, 64, 1e-9).unwrap().verdict, PurityVerdict::Pure);
        assert!(matches!(
            is_pure_contraction(&real_diag(&[1.5]), 8, 1e-9),
            Err(WoldError::NotContraction { .. })
        ));
        let rot = from_real_rows(&[&[0.6, -0.8], &[0.8, 0.6]]);
        assert_eq!(is_pure_contraction(&rot, 64, 1e-9).unwrap().verdict, PurityVerdict::NotPure);
    }

    #[test]
    fn harness_on_shift() {
        let rep = weighted_shift(&[1.0, 1.5, 2.0]);
        let zero = pure_equivalence_harness(&rep, &Matrix::zeros(4, 4), 1 << 12, &cfg()).unwrap();
        assert!(zero.decided && !zero.violation);
        assert_eq!(zero.operator.verdict, PurityVerdict::Pure);
        let one = pure_equivalence_harness(&rep, &identity(4), 1 << 12, &cfg()).unwrap();
        assert!(one.decided && !one.violation);
        assert_eq!(one.compression.verdict, PurityVerdict::NotPure);
        let t = rep.v().clone();
        let p = identity(4) * c64(0.5, 0.0) + &t * c64(0.1, 0.0);
        let p = &p * c64(1.0 / op_norm(&p).max(1.0), 0.0);
        let r = pure_equivalence_harness(&rep, &p, 1 << 12, &cfg()).unwrap();
        assert!(r.decided && !r.violation);
        let bad = real_diag(&[1.0, 0.5, 0.5, 0.5]);
        assert!(matches!(pure_equivalence_harness(&rep, &bad, 8, &cfg()), Err(WoldError::PreconditionFailed(_))));
    }

    #[test]
    fn witness_on_shift() {
        let rep = weighted_shift(&[1.0, 1.0, 1.0]);
        let k = Subspace::coordinates(4, &[2, 3]);
        let wit = invariant_witness(&rep, &k, &cfg()).unwrap();
        assert_eq!(wit.level, 2);
        assert!(wit.residual < 1e-10);
        let e2 = Subspace::coordinates(4, &[2]);
        assert!(Subspace::span(&wit.h1, &cfg().tol).same_as(&e2, &cfg().tol).unwrap());
    }
}
