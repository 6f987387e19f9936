use serde::{Deserialize, Serialize};

use crate::error::{Result, WoldError};
use crate::linalg::{mul_lifted_left, mul_lifted_right, op_norm, reduced_min_modulus, Subspace};
use crate::model::{iterates_v, Config, Representation};

/// Ranges `R(Ṽ_1), R(Ṽ_2), …` up to the point where the chain is confirmed stable.
#[derive(Debug, Clone)]
pub struct RangeChain {
    /// `ranges[k]` is `R(Ṽ_{k+1})`.
    pub ranges: Vec<Subspace>,
    /// First `n` with `R(Ṽ_n) = R(Ṽ_{n+1})`.
    pub stabilization: usize,
}

impl RangeChain {
    pub fn limit(&self) -> &Subspace {
        &self.ranges[self.stabilization - 1]
    }

    /// `R(Ṽ_n)` for `n ≥ 1`, using the stable value past the computed part.
    pub fn range(&self, n: usize) -> &Subspace {
        assert!(n >= 1, "ranges are indexed from n = 1");
        self.ranges.get(n - 1).unwrap_or_else(|| self.limit())
    }
}

/// Number of consecutive mutual containments required before the chain counts as stable.
const CONFIRMATIONS: usize = 2;

/// Runs a decreasing chain `next(k)` until `CONFIRMATIONS` consecutive mutual
/// containments are followed by one more confirming step. Returns all members and
/// the index of the first member of the stable run.
///
/// A decreasing chain in dimension `m` can strictly drop at most `m` times, so
/// running past `m + CONFIRMATIONS + 2` members means the containment test is
/// being fooled by noise; that is reported instead of looping.
pub(crate) fn stabilize(
    mut next: impl FnMut(usize, Option<&Subspace>) -> Result<Subspace>,
    ambient: usize,
    cfg: &Config,
) -> Result<(Vec<Subspace>, usize)> {
    let mut chain: Vec<Subspace> = Vec::new();
    let mut run = 0;
    let mut start = 1;
    let cap = ambient + CONFIRMATIONS + 2;
    loop {
        let k = chain.len() + 1;
        if k > cap {
            return Err(WoldError::Inconsistent(format!(
                "subspace chain did not settle within {cap} steps"
            )));
        }
        let s = next(k, chain.last())?;
        let zero = s.is_zero();
        if let Some(prev) = chain.last() {
            if s.same_as(prev, &cfg.tol)? {
                run += 1;
            } else {
                run = 0;
                start = k;
            }
        }
        chain.push(s);
        // The zero subspace is absorbing, no confirmation needed.
        if zero {
            return Ok((chain, start));
        }
        if run > CONFIRMATIONS {
            return Ok((chain, start));
        }
    }
}

/// `R(Ṽ_n)` computed from the explicit iterates, until stable.
pub fn range_chain(rep: &Representation, cfg: &Config) -> Result<RangeChain> {
    let d = rep.dim_e();
    let mut current = rep.v().clone();
    let mut blocks = d;
    // Products of k factors carry rounding noise of order eps·‖Ṽ‖^k, which the
    // plain relative cutoff would promote to rank once Ṽ_k itself is that small.
    let norm = op_norm(rep.v());
    let (ranges, stabilization) = stabilize(
        |k, _| {
            if k > 1 {
                cfg.lifted_size(d, k, rep.dim_h())?;
                current = mul_lifted_right(&current, blocks, rep.v())?;
                blocks *= d;
            }
            Ok(Subspace::range_scaled(&current, &cfg.tol, power_noise_scale(norm, k)))
        },
        rep.dim_h(),
        cfg,
    )?;
    Ok(RangeChain { ranges, stabilization })
}

/// Floor for rank decisions on a product of `k` factors of norm `norm`: with the
/// relative cutoff of 1e-10 this sits about fifty times above the rounding noise.
pub(crate) fn power_noise_scale(norm: f64, k: usize) -> f64 {
    1e-4 * norm.powi(k as i32)
}

/// Generalized range `R^∞ = ⋂_n R(Ṽ_n)`.
pub fn generalized_range(rep: &Representation, cfg: &Config) -> Result<Subspace> {
    Ok(range_chain(rep, cfg)?.limit().clone())
}

/// Image `Ṽ(E⊗K)`.
pub fn translate(rep: &Representation, k: &Subspace, cfg: &Config) -> Result<Subspace> {
    k.lift(rep.dim_e()).image(rep.v(), &cfg.tol)
}

/// Greatest subspace `K` with `Ṽ(E⊗K) = K`, by the iteration `K ↦ Ṽ(E⊗K)` from `H`.
///
/// The result is compared against [`generalized_range`], which is computed from
/// the explicit iterates; a mismatch is reported as an error.
pub fn algebraic_core(rep: &Representation, cfg: &Config) -> Result<Subspace> {
    let m = rep.dim_h();
    let (chain, start) = stabilize(
        |_, prev| {
            let base = prev.cloned().unwrap_or_else(|| Subspace::full(m));
            translate(rep, &base, cfg)
        },
        m,
        cfg,
    )?;
    let core = chain[start - 1].clone();
    let image = translate(rep, &core, cfg)?;
    if !image.same_as(&core, &cfg.tol)? {
        return Err(WoldError::Inconsistent("algebraic core is not a fixed point".into()));
    }
    let rinf = generalized_range(rep, cfg)?;
    if !rinf.same_as(&core, &cfg.tol)? {
        return Err(WoldError::Inconsistent(format!(
            "algebraic core (dim {}) differs from generalized range (dim {})",
            core.dim(),
            rinf.dim()
        )));
    }
    Ok(core)
}

/// Outcome of one inclusion test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub level: usize,
    pub holds: bool,
    pub residual: f64,
}

/// Regularity checks relative to a truncation boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRegularity {
    pub interior_kernel_dim: usize,
    pub safe_depth: usize,
    /// Interior kernel inside `E⊗R(Ṽ_m)` for `m ≤ safe_depth`.
    pub per_m: Vec<Witness>,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityVerdict {
    Regular,
    /// Regular once kernel directions created by truncation are set aside.
    RegularModuloBoundary,
    NotRegular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Reduced minimum modulus; the range is always closed in finite dimensions.
    pub gamma: f64,
    pub kernel_dim: usize,
    pub rinf_dim: usize,
    pub stabilization: usize,
    pub horizon: usize,
    /// `N(Ṽ) ⊆ E⊗R^∞`.
    pub kernel_inclusion_holds: bool,
    pub kernel_residual: f64,
    /// `N(Ṽ) ⊆ E⊗R(Ṽ_m)` for `m = 1..=horizon`.
    pub per_m: Vec<Witness>,
    /// The primary verdict disagrees with the per-level verdicts.
    pub anomaly: bool,
    pub boundary: Option<BoundaryRegularity>,
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        self.kernel_inclusion_holds
    }

    pub fn verdict(&self) -> RegularityVerdict {
        if self.kernel_inclusion_holds {
            RegularityVerdict::Regular
        } else if self.boundary.as_ref().is_some_and(|b| b.holds) {
            RegularityVerdict::RegularModuloBoundary
        } else {
            RegularityVerdict::NotRegular
        }
    }

    /// Regular, possibly only after setting the truncation boundary aside.
    pub fn admissible(&self) -> bool {
        self.verdict() != RegularityVerdict::NotRegular
    }
}

pub fn is_regular(rep: &Representation, cfg: &Config) -> Result<RegularityReport> {
    let tol = &cfg.tol;
    let d = rep.dim_e();
    let m = rep.dim_h();
    let chain = range_chain(rep, cfg)?;
    let rinf = chain.limit();
    let kernel = Subspace::kernel(rep.v(), tol);
    let kernel_residual = kernel.residual_outside(&rinf.lift(d))?;
    let kernel_inclusion_holds = kernel_residual <= tol.sub;

    let horizon = cfg.horizon(chain.stabilization, d, m);
    let ranges = ranges_up_to(rep, horizon, &chain, cfg)?;
    let mut per_m = Vec::with_capacity(horizon);
    for (k, r) in ranges.iter().enumerate() {
        let residual = kernel.residual_outside(&r.lift(d))?;
        per_m.push(Witness { level: k + 1, holds: residual <= tol.sub, residual });
    }
    let anomaly = per_m.iter().all(|w| w.holds) != kernel_inclusion_holds;

    let boundary = match rep.truncation() {
        None => None,
        Some(t) => {
            let interior = rep.interior_kernel(tol);
            let depth = t.safe_depth.min(ranges.len()).max(1);
            let mut wit = Vec::with_capacity(depth);
            for (k, r) in ranges.iter().take(depth).enumerate() {
                let residual = interior.residual_outside(&r.lift(d))?;
                wit.push(Witness { level: k + 1, holds: residual <= tol.sub, residual });
            }
            let holds = wit.iter().all(|w| w.holds);
            Some(BoundaryRegularity {
                interior_kernel_dim: interior.dim(),
                safe_depth: depth,
                per_m: wit,
                holds,
            })
        }
    };

    Ok(RegularityReport {
        gamma: reduced_min_modulus(rep.v(), tol),
        kernel_dim: kernel.dim(),
        rinf_dim: rinf.dim(),
        stabilization: chain.stabilization,
        horizon,
        kernel_inclusion_holds,
        kernel_residual,
        per_m,
        anomaly,
        boundary,
    })
}

/// `R(Ṽ_1..=n)` computed directly from the iterates where the budget allows,
/// falling back on the stable chain value beyond that.
fn ranges_up_to(
    rep: &Representation,
    n: usize,
    chain: &RangeChain,
    cfg: &Config,
) -> Result<Vec<Subspace>> {
    let mut out: Vec<Subspace> = chain.ranges.iter().take(n).cloned().collect();
    if out.len() < n {
        let reachable = n.min(cfg.max_level(rep.dim_e(), rep.dim_h()));
        if reachable > out.len() {
            let its = iterates_v(rep, reachable, cfg)?;
            let norm = op_norm(rep.v());
            for (k, a) in its.iter().enumerate().skip(out.len() + 1) {
                out.push(Subspace::range_scaled(a, &cfg.tol, power_noise_scale(norm, k)));
            }
        }
        while out.len() < n {
            out.push(chain.limit().clone());
        }
    }
    Ok(out)
}

/// Both sides of the kernel-lift identity
/// `(I_{E^{⊗n}}⊗Ṽ_m) N(Ṽ_{m+n}) = N(Ṽ_n) ∩ E^{⊗n}⊗R(Ṽ_m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelLiftCheck {
    pub m: usize,
    pub n: usize,
    pub lhs_dim: usize,
    pub rhs_dim: usize,
    pub equal: bool,
}

pub fn kernel_lift_identity(
    rep: &Representation,
    m: usize,
    n: usize,
    cfg: &Config,
) -> Result<KernelLiftCheck> {
    let tol = &cfg.tol;
    let d = rep.dim_e();
    let its = iterates_v(rep, m + n, cfg)?;
    let blocks = crate::linalg::checked_pow(d, n).expect("within budget");
    let big_kernel = Subspace::kernel(&its[m + n], tol);
    let lifted = mul_lifted_left(blocks, &its[m], big_kernel.basis())?;
    // Rounding in the lifted image must be judged against the operator, not the image.
    let lhs = Subspace::range_scaled(&lifted, tol, op_norm(&its[m]));
    let rhs_range = Subspace::range(&its[m], tol).lift(blocks);
    let rhs = rhs_range.intersect(&Subspace::kernel(&its[n], tol), tol)?;
    let equal = lhs.same_as(&rhs, tol)?;
    Ok(KernelLiftCheck { m, n, lhs_dim: lhs.dim(), rhs_dim: rhs.dim(), equal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, from_real_rows, identity, Matrix};

    fn cfg() -> Config {
        Config::default()
    }

    fn shift(n: usize) -> Matrix {
        Matrix::from_fn(n, n, |i, j| if i == j + 1 { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
    }

    #[test]
    fn nilpotent_shift_has_zero_generalized_range() {
        let rep = Representation::new(1, 4, shift(4)).unwrap();
        assert!(generalized_range(&rep, &cfg()).unwrap().is_zero());
        assert!(algebraic_core(&rep, &cfg()).unwrap().is_zero());
    }

    #[test]
    fn invertible_has_full_generalized_range() {
        let v = from_real_rows(&[&[2.0, 1.0], &[0.0, 1.0]]);
        let rep = Representation::new(1, 2, v).unwrap();
        assert_eq!(generalized_range(&rep, &cfg()).unwrap().dim(), 2);
        assert_eq!(algebraic_core(&rep, &cfg()).unwrap().dim(), 2);
        assert!(is_regular(&rep, &cfg()).unwrap().is_regular());
    }

    #[test]
    fn two_by_two_nilpotent_is_not_regular() {
        let v = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let rep = Representation::new(1, 2, v).unwrap();
        let report = is_regular(&rep, &cfg()).unwrap();
        assert!(!report.is_regular());
        assert_eq!(report.kernel_dim, 1);
        assert_eq!(report.rinf_dim, 0);
        assert!(!report.anomaly);
        assert_eq!(report.verdict(), RegularityVerdict::NotRegular);
    }

    #[test]
    fn injective_is_regular() {
        let rep = Representation::new(1, 3, identity(3)).unwrap();
        let report = is_regular(&rep, &cfg()).unwrap();
        assert!(report.is_regular());
        assert_eq!(report.kernel_dim, 0);
    }

    #[test]
    fn chain_of_a_partial_nilpotent() {
        // e0 -> e1 -> 0 on the first two coordinates, identity on the third.
        let v = from_real_rows(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]);
        let rep = Representation::new(1, 3, v).unwrap();
        let chain = range_chain(&rep, &cfg()).unwrap();
        assert_eq!(chain.ranges[0].dim(), 2);
        assert_eq!(chain.limit().dim(), 1);
        assert_eq!(chain.stabilization, 2);
    }

    #[test]
    fn kernel_lift_on_shift() {
        let rep = Representation::new(1, 4, shift(4)).unwrap();
        for (m, n) in [(1, 1), (1, 2), (2, 1)] {
            let c = kernel_lift_identity(&rep, m, n, &cfg()).unwrap();
            assert!(c.equal, "{c:?}");
        }
    }
}
