use serde::{Deserialize, Serialize};

use super::regularity::{generalized_range, is_regular, Witness};
use crate::error::{Result, WoldError};
use crate::linalg::{checked_pow, identity, mul_lifted_left, op_norm, pinv, Matrix, Subspace};
use crate::model::{iterates_v, Config, Representation};

/// A generalized inverse `S : H → E⊗H` with `ṼSṼ = Ṽ` and `SṼS = S`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenInverse {
    s: Matrix,
    dim_e: usize,
    dim_h: usize,
}

impl GenInverse {
    pub fn matrix(&self) -> &Matrix {
        &self.s
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }
}

/// Residuals `‖ṼSṼ − Ṽ‖` and `‖SṼS − S‖`.
pub fn inverse_residuals(v: &Matrix, s: &Matrix) -> (f64, f64) {
    (op_norm(&(v * s * v - v)), op_norm(&(s * v * s - s)))
}

fn validate(rep: &Representation, s: Matrix) -> Result<GenInverse> {
    let (d, m) = (rep.dim_e(), rep.dim_h());
    if s.shape() != (d * m, m) {
        return Err(WoldError::DimensionMismatch(format!(
            "generalized inverse must be {}x{}, got {}x{}",
            d * m,
            m,
            s.nrows(),
            s.ncols()
        )));
    }
    let (r1, r2) = inverse_residuals(rep.v(), &s);
    let scale = op_norm(rep.v()).max(op_norm(&s)).max(1.0);
    let worst = r1.max(r2);
    if worst > 1e-9 * scale {
        return Err(WoldError::IdentityViolated { residual: worst });
    }
    Ok(GenInverse { s, dim_e: d, dim_h: m })
}

/// `S = Ṽ† + (I − Ṽ†Ṽ)·Y·ṼṼ†`.
pub fn make_generalized_inverse(rep: &Representation, y: &Matrix, cfg: &Config) -> Result<GenInverse> {
    let (d, m) = (rep.dim_e(), rep.dim_h());
    if y.shape() != (d * m, m) {
        return Err(WoldError::DimensionMismatch(format!("Y must be {}x{}", d * m, m)));
    }
    let v = rep.v();
    let vp = pinv(v, &cfg.tol);
    let s = &vp + (identity(d * m) - &vp * v) * y * (v * &vp);
    validate(rep, s)
}

/// Accepts a user supplied matrix after checking both identities.
pub fn accept_generalized_inverse(rep: &Representation, s: Matrix) -> Result<GenInverse> {
    validate(rep, s)
}

/// `[S^{(0)} = I, S^{(1)} = S, …, S^{(n)}]` with `S^{(k+1)} = (I_{E^{⊗k}}⊗S) S^{(k)}`.
pub fn iterates_s(gi: &GenInverse, n: usize, cfg: &Config) -> Result<Vec<Matrix>> {
    iterates_left(gi.matrix(), gi.dim_e(), gi.dim_h(), n, cfg)
}

pub fn iterate_s(gi: &GenInverse, n: usize, cfg: &Config) -> Result<Matrix> {
    Ok(iterates_s(gi, n, cfg)?.pop().expect("at least S^(0)"))
}

/// Iterates `X^{(k+1)} = (I_{E^{⊗k}}⊗X) X^{(k)}` for `X : H → E⊗H`.
pub(crate) fn iterates_left(x: &Matrix, d: usize, m: usize, n: usize, cfg: &Config) -> Result<Vec<Matrix>> {
    cfg.lifted_size(d, n, m)?;
    let mut out = vec![identity(m)];
    for k in 1..=n {
        let blocks = checked_pow(d, k - 1).expect("within budget");
        let next = mul_lifted_left(blocks, x, &out[k - 1])?;
        out.push(next);
    }
    Ok(out)
}

/// Per-level check of `N(I_{E^{⊗m}}⊗S) ⊆ R(S^{(m)})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiregularityReport {
    pub per_m: Vec<Witness>,
    pub holds: bool,
}

pub fn is_biregular(
    rep: &Representation,
    gi: &GenInverse,
    horizon: usize,
    cfg: &Config,
) -> Result<BiregularityReport> {
    if !is_regular(rep, cfg)?.is_regular() {
        return Err(WoldError::NotRegular);
    }
    let tol = &cfg.tol;
    let d = rep.dim_e();
    let ns = Subspace::kernel(gi.matrix(), tol);
    let s_its = iterates_s(gi, horizon, cfg)?;
    let mut per_m = Vec::with_capacity(horizon);
    for (m, s_m) in s_its.iter().enumerate().skip(1) {
        let blocks = checked_pow(d, m).expect("within budget");
        let kernel = ns.lift(blocks);
        let range = Subspace::range(s_m, tol);
        let residual = kernel.residual_outside(&range)?;
        per_m.push(Witness { level: m, holds: residual <= tol.sub, residual });
    }
    let holds = per_m.iter().all(|w| w.holds);
    Ok(BiregularityReport { per_m, holds })
}

/// Relative residuals of `Ṽ_n S^{(n)} Ṽ_n = Ṽ_n` and `S^{(n)} Ṽ_n S^{(n)} = S^{(n)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerIdentityResiduals {
    pub n: usize,
    pub first: f64,
    pub second: f64,
}

pub fn power_identity_residuals(
    rep: &Representation,
    gi: &GenInverse,
    n_max: usize,
    cfg: &Config,
) -> Result<Vec<PowerIdentityResiduals>> {
    let v_its = iterates_v(rep, n_max, cfg)?;
    let s_its = iterates_s(gi, n_max, cfg)?;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let (v, s) = (&v_its[n], &s_its[n]);
        let (r1, r2) = inverse_residuals(v, s);
        out.push(PowerIdentityResiduals {
            n,
            first: r1 / op_norm(v).max(f64::MIN_POSITIVE),
            second: r2 / op_norm(s).max(f64::MIN_POSITIVE),
        });
    }
    Ok(out)
}

/// `R^∞` coincides with the vectors fixed by every `Ṽ_n S^{(n)}`, `n ≤ horizon`.
pub fn r_infty_fixedpoint_check(
    rep: &Representation,
    gi: &GenInverse,
    horizon: usize,
    cfg: &Config,
) -> Result<bool> {
    if !is_regular(rep, cfg)?.is_regular() {
        return Err(WoldError::NotRegular);
    }
    let tol = &cfg.tol;
    let m = rep.dim_h();
    let rinf = generalized_range(rep, cfg)?;
    let v_its = iterates_v(rep, horizon, cfg)?;
    let s_its = iterates_s(gi, horizon, cfg)?;
    let mut fixed = Subspace::full(m);
    for n in 1..=horizon {
        let e = &v_its[n] * &s_its[n];
        let defect = &e * rinf.basis() - rinf.basis();
        if defect.column_iter().any(|c| c.norm() > tol.sub) {
            return Ok(false);
        }
        let kernel = Subspace::kernel_scaled(&(identity(m) - &e), tol, 1.0);
        fixed = kernel.intersect(&fixed, tol)?;
    }
    fixed.same_as(&rinf, tol)
}

/// `S(R^∞) ⊆ E⊗R^∞`.
pub fn s_invariance_check(rep: &Representation, gi: &GenInverse, cfg: &Config) -> Result<bool> {
    let rinf = generalized_range(rep, cfg)?;
    if rinf.is_zero() {
        return Ok(true);
    }
    let image = Subspace::range_scaled(&(gi.matrix() * rinf.basis()), &cfg.tol, op_norm(gi.matrix()));
    image.is_within(&rinf.lift(rep.dim_e()), &cfg.tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, from_real_rows, zeros};

    fn cfg() -> Config {
        Config::default()
    }

    fn sample(r: usize, c: usize, seed: f64) -> Matrix {
        Matrix::from_fn(r, c, |i, j| {
            let t = seed * (1.0 + i as f64 * 0.71 + j as f64 * 1.13);
            c64(t.sin(), (2.0 * t).cos())
        })
    }

    #[test]
    fn zero_parameter_gives_pseudoinverse() {
        let rep = Representation::new(2, 2, sample(2, 4, 0.7)).unwrap();
        let gi = make_generalized_inverse(&rep, &zeros(4, 2), &cfg()).unwrap();
        assert!((gi.matrix() - pinv(rep.v(), &cfg().tol)).norm() < 1e-12);
    }

    #[test]
    fn random_parameter_satisfies_identities() {
        let rep = Representation::new(2, 2, sample(2, 4, 0.3)).unwrap();
        let gi = make_generalized_inverse(&rep, &sample(4, 2, 1.9), &cfg()).unwrap();
        let (r1, r2) = inverse_residuals(rep.v(), gi.matrix());
        assert!(r1 < 1e-9 && r2 < 1e-9);
    }

    #[test]
    fn injective_ignores_parameter() {
        let v = from_real_rows(&[&[2.0, 0.0], &[0.0, 3.0]]);
        let rep = Representation::new(1, 2, v.clone()).unwrap();
        let gi = make_generalized_inverse(&rep, &sample(2, 2, 0.4), &cfg()).unwrap();
        let inv = v.try_inverse().unwrap();
        assert!((gi.matrix() - inv).norm() < 1e-12);
    }

    #[test]
    fn scalar_powers() {
        let rep = Representation::new(1, 1, from_real_rows(&[&[2.0]])).unwrap();
        let gi = make_generalized_inverse(&rep, &zeros(1, 1), &cfg()).unwrap();
        let s3 = iterate_s(&gi, 3, &cfg()).unwrap();
        assert!((s3[(0, 0)].re - 0.125).abs() < 1e-15);
    }

    #[test]
    fn composition_of_s_powers() {
        let cfg = cfg();
        let rep = Representation::new(2, 2, sample(2, 4, 0.9)).unwrap();
        let gi = make_generalized_inverse(&rep, &sample(4, 2, 0.2), &cfg).unwrap();
        let its = iterates_s(&gi, 3, &cfg).unwrap();
        // (I_E ⊗ S^(2)) S^(1) = S^(3)
        let lhs = mul_lifted_left(2, &its[2], &its[1]).unwrap();
        assert!((lhs - &its[3]).norm() < 1e-10 * its[3].norm().max(1.0));
    }

    #[test]
    fn rejects_bad_candidate() {
        let rep = Representation::new(1, 1, from_real_rows(&[&[2.0]])).unwrap();
        let bad = from_real_rows(&[&[1.0]]);
        assert!(matches!(
            accept_generalized_inverse(&rep, bad),
            Err(WoldError::IdentityViolated { .. })
        ));
    }

    #[test]
    fn biregular_requires_regular() {
        let v = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let rep = Representation::new(1, 2, v).unwrap();
        let gi = make_generalized_inverse(&rep, &zeros(2, 2), &cfg()).unwrap();
        assert_eq!(is_biregular(&rep, &gi, 2, &cfg()), Err(WoldError::NotRegular));
    }

    #[test]
    fn unitary_fixed_points_and_invariance() {
        let v = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let rep = Representation::new(1, 2, v).unwrap();
        let gi = make_generalized_inverse(&rep, &zeros(2, 2), &cfg()).unwrap();
        assert!(r_infty_fixedpoint_check(&rep, &gi, 3, &cfg()).unwrap());
        assert!(s_invariance_check(&rep, &gi, &cfg()).unwrap());
        assert!(is_biregular(&rep, &gi, 3, &cfg()).unwrap().holds);
    }
}
