use serde::{Deserialize, Serialize};

use super::defect_operator;
use crate::error::Result;
use crate::linalg::{checked_pow, identity, lift, mul_lifted_left, op_norm, pinv, Matrix};
use crate::model::{iterates_v, Config, Representation};
use crate::structure::dagger_iterates;

/// Norm identity at one level `n`, checked over the standard basis of `H`:
///
/// `‖h‖² = Σ_{i<n} ‖(I⊗P_W)Ṽ^{†(i)}h‖² + ‖Ṽ^{†(n)}h‖² + Σ_{1≤i≤n} ‖(I⊗D_Ṽ)Ṽ^{†(i)}h‖²`
/// with `P_W = I − ṼṼ†`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormIdentityResidual {
    pub n: usize,
    /// Largest `|rhs − ‖h‖²| / ‖h‖²` over the basis.
    pub max_relative: f64,
}

pub fn norm_identity_residuals(
    rep: &Representation,
    n_max: usize,
    cfg: &Config,
) -> Result<Vec<NormIdentityResidual>> {
    let d = rep.dim_e();
    let m = rep.dim_h();
    let v = rep.v();
    let pw = identity(m) - v * pinv(v, &cfg.tol);
    let defect = defect_operator(rep, cfg)?.d;
    let daggers = dagger_iterates(rep, n_max, cfg)?;
    let col_norms = |a: &Matrix| a.column_iter().map(|c| c.norm_squared()).collect::<Vec<f64>>();

    let mut wandering = vec![0.0; m];
    let mut defects = vec![0.0; m];
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let i = n - 1;
        let blocks = checked_pow(d, i).expect("within budget");
        let pw_term = col_norms(&mul_lifted_left(blocks, &pw, &daggers[i])?);
        let d_term = col_norms(&mul_lifted_left(blocks, &defect, &daggers[n])?);
        for h in 0..m {
            wandering[h] += pw_term[h];
            defects[h] += d_term[h];
        }
        let tail = col_norms(&daggers[n]);
        let max_relative = (0..m)
            .map(|h| (wandering[h] + tail[h] + defects[h] - 1.0).abs())
            .fold(0.0, f64::max);
        out.push(NormIdentityResidual { n, max_relative });
    }
    Ok(out)
}

/// Telescoping identities at one level `n`:
///
/// `I − Ṽ_nṼ^{†(n)} = Σ_{i<n} Ṽ_i(I_{E^{⊗i}}⊗P_W)Ṽ^{†(i)}` and
/// `I − Ṽ^{†(n)}Ṽ_n = Σ_{i<n} I_{E^{⊗n−i−1}}⊗((I_E⊗Ṽ^{†(i)})P_{W†}(I_E⊗Ṽ_i))`
/// with `P_{W†} = I − Ṽ†Ṽ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelescopingResidual {
    pub n: usize,
    /// `‖lhs − rhs‖ / max(1, ‖lhs‖)` for the identity on `H`.
    pub range_side: f64,
    /// Same for the identity on `E^{⊗n}⊗H`.
    pub domain_side: f64,
}

pub fn telescoping_residuals(
    rep: &Representation,
    n_max: usize,
    cfg: &Config,
) -> Result<Vec<TelescopingResidual>> {
    let d = rep.dim_e();
    let m = rep.dim_h();
    let v = rep.v();
    let vp = pinv(v, &cfg.tol);
    let pw = identity(m) - v * &vp;
    let pwd = identity(d * m) - &vp * v;
    let its = iterates_v(rep, n_max, cfg)?;
    let daggers = dagger_iterates(rep, n_max, cfg)?;

    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let lhs = identity(m) - &its[n] * &daggers[n];
        let mut rhs = Matrix::zeros(m, m);
        for i in 0..n {
            let blocks = checked_pow(d, i).expect("within budget");
            rhs += &its[i] * mul_lifted_left(blocks, &pw, &daggers[i])?;
        }
        let range_side = op_norm(&(&lhs - &rhs)) / op_norm(&lhs).max(1.0);

        let size = its[n].ncols();
        let lhs = identity(size) - &daggers[n] * &its[n];
        let mut rhs = Matrix::zeros(size, size);
        for i in 0..n {
            let inner = lift(d, &daggers[i]) * &pwd * lift(d, &its[i]);
            let outer = checked_pow(d, n - i - 1).expect("within budget");
            rhs += lift(outer, &inner);
        }
        let domain_side = op_norm(&(&lhs - &rhs)) / op_norm(&lhs).max(1.0);
        out.push(TelescopingResidual { n, range_side, domain_side });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, from_real_rows};

    fn cfg() -> Config {
        Config::default()
    }

    fn expansive_surjective() -> Representation {
        let v = Matrix::from_fn(2, 4, |i, j| {
            let t = 0.6 * (1.0 + i as f64 * 0.77 + j as f64 * 1.31);
            c64(t.sin(), (1.7 * t).cos())
        });
        let g = crate::linalg::reduced_min_modulus(&v, &cfg().tol);
        Representation::new(2, 2, v * c64(1.25 / g, 0.0)).unwrap()
    }

    #[test]
    fn norm_identity_on_invertible_scalar_block() {
        let rep = Representation::new(1, 2, from_real_rows(&[&[2.0, 1.0], &[0.0, 3.0]])).unwrap();
        for r in norm_identity_residuals(&rep, 4, &cfg()).unwrap() {
            assert!(r.max_relative < 1e-7, "{r:?}");
        }
    }

    #[test]
    fn norm_identity_on_surjective() {
        let rep = expansive_surjective();
        assert!(crate::growth::gamma(&rep, &cfg()) > 1.0);
        for r in norm_identity_residuals(&rep, 4, &cfg()).unwrap() {
            assert!(r.max_relative < 1e-7, "{r:?}");
        }
    }

    #[test]
    fn telescoping_on_surjective_and_shift() {
        for rep in [
            expansive_surjective(),
            Representation::new(1, 3, from_real_rows(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])).unwrap(),
        ] {
            for r in telescoping_residuals(&rep, 4, &cfg()).unwrap() {
                assert!(r.range_side < 1e-8 && r.domain_side < 1e-8, "{r:?}");
            }
        }
    }
}
