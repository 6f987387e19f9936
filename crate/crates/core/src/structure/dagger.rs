use serde::{Deserialize, Serialize};

use super::geninv::iterates_left;
use super::regularity::range_chain;
use crate::error::Result;
use crate::linalg::{op_norm, pinv, svd_info, Matrix, Subspace, TolerancePolicy};
use crate::model::{iterates_v, Config, Representation};

/// `[Ṽ^{†(0)} = I, Ṽ^{†(1)} = Ṽ†, …, Ṽ^{†(n)}]`.
pub fn dagger_iterates(rep: &Representation, n: usize, cfg: &Config) -> Result<Vec<Matrix>> {
    let vp = pinv(rep.v(), &cfg.tol);
    iterates_left(&vp, rep.dim_e(), rep.dim_h(), n, cfg)
}

pub fn dagger_iterate(rep: &Representation, n: usize, cfg: &Config) -> Result<Matrix> {
    Ok(dagger_iterates(rep, n, cfg)?.pop().expect("at least level 0"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaggerCheck {
    pub n: usize,
    pub holds: bool,
    pub residual: f64,
}

/// Compares `Ṽ^{†(n)}` with `(Ṽ_n)†` for `n = 1..=horizon`.
pub fn dagger_checks(rep: &Representation, horizon: usize, cfg: &Config) -> Result<Vec<DaggerCheck>> {
    let daggers = dagger_iterates(rep, horizon, cfg)?;
    let its = iterates_v(rep, horizon, cfg)?;
    let mut out = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let direct = pinv(&its[n], &cfg.tol);
        let residual = op_norm(&(&daggers[n] - &direct));
        let holds = residual <= 1e-8 * op_norm(&direct).max(1.0);
        out.push(DaggerCheck { n, holds, residual });
    }
    Ok(out)
}

pub fn is_n_dagger(rep: &Representation, n: usize, cfg: &Config) -> Result<bool> {
    Ok(dagger_checks(rep, n, cfg)?.last().is_none_or(|c| c.holds))
}

pub fn is_hyper_dagger(rep: &Representation, horizon: usize, cfg: &Config) -> Result<bool> {
    Ok(dagger_checks(rep, horizon, cfg)?.iter().all(|c| c.holds))
}

/// The compressed map `ξ ↦ P Ṽ_n ξ` from `E^{⊗n}⊗R(Ṽ)^⊥` onto
/// `R(Ṽ_n) ∩ R(Ṽ_{n+1})^⊥`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HatMapCheck {
    pub n: usize,
    pub domain_dim: usize,
    pub target_dim: usize,
    pub invertible: bool,
}

pub fn hat_map_check(rep: &Representation, n: usize, cfg: &Config) -> Result<HatMapCheck> {
    let tol = &cfg.tol;
    let d = rep.dim_e();
    let chain = range_chain(rep, cfg)?;
    let its = iterates_v(rep, n, cfg)?;
    let w = Subspace::range(rep.v(), tol).complement();
    let blocks = crate::linalg::checked_pow(d, n).expect("within budget");
    let domain = w.lift(blocks);
    let r_n = chain.range(n);
    let r_next = chain.range(n + 1);
    let target = r_next.complement().intersect(r_n, tol)?;
    let (dd, td) = (domain.dim(), target.dim());
    let invertible = if dd != td {
        false
    } else if dd == 0 {
        true
    } else {
        let compressed = target.basis().adjoint() * &its[n] * domain.basis();
        svd_info(&compressed, &TolerancePolicy { rank: tol.rank, ..*tol }).rank == dd
    };
    Ok(HatMapCheck { n, domain_dim: dd, target_dim: td, invertible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, from_real_rows, real_diag};

    fn cfg() -> Config {
        Config::default()
    }

    fn shift(n: usize) -> Matrix {
        Matrix::from_fn(n, n, |i, j| if i == j + 1 { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
    }

    #[test]
    fn first_level_always_agrees() {
        let v = Matrix::from_fn(2, 4, |i, j| c64((i * 3 + j) as f64 - 2.5, 0.1 * j as f64));
        let rep = Representation::new(2, 2, v).unwrap();
        assert!(is_n_dagger(&rep, 1, &cfg()).unwrap());
    }

    #[test]
    fn coisometry_is_hyper_dagger() {
        let s = 0.5f64.sqrt();
        let v = from_real_rows(&[&[s, 0.0, s, 0.0], &[0.0, s, 0.0, -s]]);
        let rep = Representation::new(2, 2, v).unwrap();
        assert!(is_hyper_dagger(&rep, 3, &cfg()).unwrap());
    }

    #[test]
    fn generic_surjective_rep_is_not_two_dagger() {
        let v = Matrix::from_fn(2, 4, |i, j| c64(((i * 4 + j) as f64 * 0.9).sin(), (j as f64 - i as f64) * 0.3));
        let rep = Representation::new(2, 2, v).unwrap();
        assert!(is_n_dagger(&rep, 1, &cfg()).unwrap());
        assert!(!is_n_dagger(&rep, 2, &cfg()).unwrap());
    }

    #[test]
    fn idempotent_breaks_second_level() {
        // T² = T, so (T²)† = T†, while (T†)² differs.
        let t = from_real_rows(&[&[1.0, 1.0], &[0.0, 0.0]]);
        let rep = Representation::new(1, 2, t).unwrap();
        assert!(!is_n_dagger(&rep, 2, &cfg()).unwrap());
    }

    #[test]
    fn hat_map_on_invertible_is_trivial() {
        let rep = Representation::new(1, 2, real_diag(&[2.0, 3.0])).unwrap();
        let h = hat_map_check(&rep, 1, &cfg()).unwrap();
        assert_eq!((h.domain_dim, h.target_dim), (0, 0));
        assert!(h.invertible);
    }

    #[test]
    fn hat_map_detects_non_regular() {
        // e1 -> e0: regular fails at the second level.
        let v = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let rep = Representation::new(1, 2, v).unwrap();
        assert!(hat_map_check(&rep, 1, &cfg()).unwrap().invertible);
        assert!(!hat_map_check(&rep, 2, &cfg()).unwrap().invertible);
    }

    #[test]
    fn shift_dagger_iterates_are_adjoint_powers() {
        let rep = Representation::new(1, 4, shift(4)).unwrap();
        let s = shift(4);
        let d2 = dagger_iterate(&rep, 2, &cfg()).unwrap();
        assert!((d2 - (&s * &s).adjoint()).norm() < 1e-14);
    }
}
