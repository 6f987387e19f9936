use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gamma_at_least_one, is_psd};
use crate::error::{Result, WoldError};
use crate::linalg::{
    c64, checked_pow, hermitian_eigen, identity, lift, min_eigenvalue, op_norm, pinv, Matrix,
    Subspace,
};
use crate::model::{iterates_v, Config, Representation};

/// Above this many columns the growth operator is not assembled densely when the
/// reduced route is available.
const DENSE_LIMIT: usize = 64;
/// Hard limit for assembling the growth operator densely.
const DENSE_MAX: usize = 1536;
/// Multipliers beyond this are treated as infeasible.
const MULTIPLIER_CAP: f64 = 1e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthRoute {
    /// Minimum eigenvalue of the assembled operator.
    Dense,
    /// Largest eigenvalue of the `dim H` sized compression; needs `γ(Ṽ) ≥ 1`.
    Reduced,
}

/// Ingredients of `M(t) = t·G + c·P − Ṽ_m*Ṽ_m` at one level `m`, where
/// `G = I_{E^{⊗m−1}}⊗(Ṽ*Ṽ − Ṽ†Ṽ)` and `P = I_{E^{⊗m−1}}⊗Ṽ†Ṽ`.
struct Level<'a> {
    blocks: usize,
    g1: Matrix,
    p1: Matrix,
    vm: &'a Matrix,
    c: f64,
    /// `max(‖G₁‖, c‖P₁‖, ‖Ṽ_m‖², 1)`.
    scale: f64,
    g1_norm: f64,
}

impl Level<'_> {
    fn dense(&self, t: f64) -> Matrix {
        let b1 = &self.g1 * c64(t, 0.0) + &self.p1 * c64(self.c, 0.0);
        lift(self.blocks, &b1) - self.vm.adjoint() * self.vm
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    /// Tight semidefiniteness used to locate the smallest multiplier.
    fn exact(&self, t: f64, route: GrowthRoute) -> Result<bool> {
        match route {
            GrowthRoute::Dense => {
                let m = self.dense(t);
                let n = m.nrows() as f64;
                let slack = 1e-12 * self.scale() + n * f64::EPSILON * (16.0 * self.scale() + t * self.g1_norm);
                Ok(min_eigenvalue(&m)? >= -slack)
            }
            GrowthRoute::Reduced => Ok(self.reduced_top(t)? <= 1.0 + 1e-12),
        }
    }

    /// `λ_max(Σ_j X_j B₁(t)† X_j*)` with `X_j` the column blocks of `Ṽ_m`.
    ///
    /// With `γ(Ṽ) ≥ 1` the block `B₁(t) = t·G₁ + c·P₁` is PSD with kernel `N(Ṽ)` and
    /// every other eigenvalue at least `c`, and `Ṽ_m` vanishes on `I⊗N(Ṽ)`, so
    /// `M(t) ⪰ 0` exactly when this value is at most one.
    fn reduced_top(&self, t: f64) -> Result<f64> {
        let b1 = &self.g1 * c64(t, 0.0) + &self.p1 * c64(self.c, 0.0);
        let eig = hermitian_eigen(&b1)?;
        let w = b1.nrows();
        let mut inv = Matrix::zeros(w, w);
        for (k, &lambda) in eig.values.iter().enumerate() {
            if lambda > 0.5 * self.c {
                let v = eig.vectors.column(k);
                inv += (&v * v.adjoint()) * c64(1.0 / lambda, 0.0);
            }
        }
        let m = self.vm.nrows();
        let mut acc = Matrix::zeros(m, m);
        for j in 0..self.blocks {
            let x = self.vm.columns(j * w, w);
            acc += &x * &inv * x.adjoint();
        }
        let eig = hermitian_eigen(&acc)?;
        Ok(eig.values.last().copied().unwrap_or(0.0))
    }

    /// On `ker G` the multiplier has no effect, so a clearly negative compression of
    /// `c·P − Ṽ_m*Ṽ_m` there rules out every multiplier. Only meaningful when
    /// `G ⪰ 0`; otherwise the search decides.
    fn kernel_obstruction(&self, cfg: &Config) -> Result<bool> {
        let eig = hermitian_eigen(&self.g1)?;
        let norm = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if eig.values.first().is_some_and(|&v| v < -cfg.tol.psd_slack(norm)) {
            return Ok(false);
        }
        let cut = 1e-9 * norm.max(1.0);
        let cols: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k].abs() <= cut).collect();
        if cols.is_empty() {
            return Ok(false);
        }
        let k1 = eig.vectors.select_columns(&cols);
        let k = lift(self.blocks, &k1);
        let body = lift(self.blocks, &(&self.p1 * c64(self.c, 0.0))) - self.vm.adjoint() * self.vm;
        let compressed = k.adjoint() * body * &k;
        let min = min_eigenvalue(&compressed)?;
        Ok(min < -cfg.tol.psd_slack(self.scale()))
    }

    fn minimal(&self, route: GrowthRoute, cfg: &Config) -> Result<Option<f64>> {
        if route == GrowthRoute::Dense && self.kernel_obstruction(cfg)? {
            return Ok(None);
        }
        smallest_feasible(|t| self.exact(t, route))
    }

    /// Tolerant verdict for a supplied multiplier, with the semidefiniteness margin.
    fn tolerant(&self, t: f64, route: GrowthRoute, cfg: &Config) -> Result<(bool, f64)> {
        match route {
            GrowthRoute::Dense => is_psd(&self.dense(t), cfg),
            GrowthRoute::Reduced => {
                let top = self.reduced_top(t)?;
                Ok((top <= 1.0 + cfg.tol.psd, 1.0 - top))
            }
        }
    }
}

/// The assembled operator `M(t) = t·G + c·P − Ṽ_m*Ṽ_m` at level `m ≥ 1`.
pub fn growth_operator(rep: &Representation, m: usize, t: f64, c: f64, cfg: &Config) -> Result<Matrix> {
    let its = iterates_v(rep, m, cfg)?;
    Ok(level(rep, m, &its[m], c, cfg).dense(t))
}

fn level<'a>(rep: &Representation, m: usize, vm: &'a Matrix, c: f64, cfg: &Config) -> Level<'a> {
    let v = rep.v();
    let p1 = pinv(v, &cfg.tol) * v;
    let g1 = v.adjoint() * v - &p1;
    let blocks = checked_pow(rep.dim_e(), m - 1).expect("within budget");
    let g1_norm = op_norm(&g1);
    let scale = g1_norm.max(c * op_norm(&p1)).max(op_norm(vm).powi(2)).max(1.0);
    Level { blocks, g1, p1, vm, c, scale, g1_norm }
}

fn choose_route(rep: &Representation, cols: usize, cfg: &Config) -> Result<GrowthRoute> {
    let reduced_ok = gamma_at_least_one(rep, cfg);
    if cols <= DENSE_LIMIT || !reduced_ok {
        if cols > DENSE_MAX {
            return Err(WoldError::BudgetExceeded { needed: cols, budget: DENSE_MAX });
        }
        return Ok(GrowthRoute::Dense);
    }
    Ok(GrowthRoute::Reduced)
}

/// Smallest `t ≥ 0` accepted by `feasible`, which must be upward closed on the
/// part of the half line where it holds. Doubling locates a feasible point and
/// bisection then closes in on the boundary. `None` when nothing up to the cap
/// is feasible.
pub(crate) fn smallest_feasible(mut feasible: impl FnMut(f64) -> Result<bool>) -> Result<Option<f64>> {
    if feasible(0.0)? {
        return Ok(Some(0.0));
    }
    let mut hi = 1.0;
    while !feasible(hi)? {
        hi *= 2.0;
        if hi > MULTIPLIER_CAP {
            return Ok(None);
        }
    }
    let mut lo = if hi == 1.0 { 0.0 } else { hi / 2.0 };
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Smallest `t ≥ 0` with `M(t) ⪰ 0` at level `m`, by the given route.
pub fn minimal_growth_multiplier(
    rep: &Representation,
    m: usize,
    c: f64,
    route: GrowthRoute,
    cfg: &Config,
) -> Result<Option<f64>> {
    if route == GrowthRoute::Reduced && !gamma_at_least_one(rep, cfg) {
        return Err(WoldError::PreconditionFailed("reduced growth route needs gamma >= 1".into()));
    }
    let its = iterates_v(rep, m, cfg)?;
    level(rep, m, &its[m], c, cfg).minimal(route, cfg)
}

/// One level of a [`GrowthReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthLevel {
    pub m: usize,
    /// Some multiplier makes the level hold.
    pub feasible: bool,
    pub minimal_d: Option<f64>,
    pub supplied_d: Option<f64>,
    /// Verdict for the supplied multiplier, when one was given.
    pub supplied_holds: Option<bool>,
    /// Dense route: `λ_min(M(t))`; reduced route: `1 − λ_max` of the compression.
    /// Evaluated at the supplied multiplier, else at the minimal one.
    pub psd_residual: f64,
    pub route: GrowthRoute,
}

/// Partial sums of `Σ_{m≥2} 1/d_m` over the computed levels. Data only; the
/// infinite sum is never decided from a truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceNote {
    pub partial_sums: Vec<f64>,
    /// Levels with `d_m = 0`, which make the sum infinite outright.
    pub zero_levels: Vec<usize>,
    pub pattern: String,
    pub shape: GrowthShape,
}

/// Coarse classification of the computed multipliers. Only `Geometric` says
/// anything about the infinite series, and only heuristically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthShape {
    ZeroTerms,
    Bounded,
    Geometric,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub horizon: usize,
    pub c: f64,
    pub levels: Vec<GrowthLevel>,
    pub divergence_note: DivergenceNote,
}

impl GrowthReport {
    pub fn all_feasible(&self) -> bool {
        self.levels.iter().all(|l| l.feasible)
    }

    /// Every supplied multiplier holds (vacuous when none were supplied).
    pub fn supplied_all_hold(&self) -> bool {
        self.levels.iter().all(|l| l.supplied_holds.unwrap_or(true))
    }

    pub fn minimal_sequence(&self) -> Vec<Option<f64>> {
        self.levels.iter().map(|l| l.minimal_d).collect()
    }
}

/// Growth inequality at levels `1..=m_max`, with `c` the constant in front of
/// the projection term (1 in the standard form).
pub fn check_growth(
    rep: &Representation,
    d_seq: Option<&[f64]>,
    m_max: usize,
    c: f64,
    cfg: &Config,
) -> Result<GrowthReport> {
    if let Some(seq) = d_seq {
        if seq.len() < m_max {
            return Err(WoldError::InvalidParams(format!(
                "{} multipliers supplied for {m_max} levels",
                seq.len()
            )));
        }
        if seq.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(WoldError::InvalidParams("multipliers must be finite and non-negative".into()));
        }
    }
    let its = iterates_v(rep, m_max, cfg)?;
    let levels: Vec<GrowthLevel> = (1..=m_max)
        .into_par_iter()
        .map(|m| -> Result<GrowthLevel> {
            let lv = level(rep, m, &its[m], c, cfg);
            let route = choose_route(rep, its[m].ncols(), cfg)?;
            let minimal_d = lv.minimal(route, cfg)?;
            let supplied_d = d_seq.map(|s| s[m - 1]);
            let (supplied_holds, psd_residual) = match (supplied_d, minimal_d) {
                (Some(t), _) => {
                    let (ok, r) = lv.tolerant(t, route, cfg)?;
                    (Some(ok), r)
                }
                (None, Some(t)) => (None, lv.tolerant(t, route, cfg)?.1),
                (None, None) => (None, lv.tolerant(MULTIPLIER_CAP, route, cfg)?.1),
            };
            Ok(GrowthLevel {
                m,
                feasible: minimal_d.is_some(),
                minimal_d,
                supplied_d,
                supplied_holds,
                psd_residual,
                route,
            })
        })
        .collect::<Result<_>>()?;
    let divergence_note = divergence_note(&levels);
    Ok(GrowthReport { horizon: m_max, c, levels, divergence_note })
}

/// Minimal multipliers for `m = 1..=m_max` (`None` where infeasible).
pub fn minimal_growth_sequence(rep: &Representation, m_max: usize, cfg: &Config) -> Result<Vec<Option<f64>>> {
    Ok(check_growth(rep, None, m_max, 1.0, cfg)?.minimal_sequence())
}

fn divergence_note(levels: &[GrowthLevel]) -> DivergenceNote {
    let mut partial_sums = Vec::new();
    let mut zero_levels = Vec::new();
    let mut sum = 0.0;
    let mut values = Vec::new();
    for l in levels.iter().filter(|l| l.m >= 2) {
        let Some(d) = l.supplied_d.or(l.minimal_d) else { break };
        if d == 0.0 {
            zero_levels.push(l.m);
            sum = f64::INFINITY;
        } else {
            sum += 1.0 / d;
        }
        partial_sums.push(sum);
        values.push(d);
    }
    let mut shape = GrowthShape::Undetermined;
    let pattern = if !zero_levels.is_empty() {
        shape = GrowthShape::ZeroTerms;
        "some d_m vanish; the series has infinite terms".to_string()
    } else if values.len() < 3 {
        "too few levels to describe".to_string()
    } else {
        let ratios: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
        let tail = &ratios[ratios.len().saturating_sub(3)..];
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(0.0, f64::max);
        let first = values[0];
        if lo >= 1.5 {
            shape = GrowthShape::Geometric;
            format!("geometric growth, ratio about {:.3}; the tail sum converges", tail[tail.len() - 1])
        } else if hi <= 2.0 * first {
            shape = GrowthShape::Bounded;
            "bounded over the computed levels; consistent with divergence".to_string()
        } else {
            "sub-geometric growth; undetermined".to_string()
        }
    };
    DivergenceNote { partial_sums, zero_levels, pattern, shape }
}

/// Both forms of the per-level growth inequality for the same `(d_k, c)`:
/// over all of `E^{⊗k}⊗H` with the defect operator, and restricted to
/// `E^{⊗k−1}⊗N(Ṽ)^⊥` with `‖(I⊗Ṽ)η‖² − ‖η‖²` in place of the defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedEquivalence {
    pub k: usize,
    pub d_k: f64,
    pub c: f64,
    pub full_min_eigenvalue: f64,
    pub restricted_min_eigenvalue: f64,
    pub full_holds: bool,
    pub restricted_holds: bool,
}

pub fn restricted_growth_equivalence(
    rep: &Representation,
    k: usize,
    d_k: f64,
    c: f64,
    cfg: &Config,
) -> Result<RestrictedEquivalence> {
    if k == 0 {
        return Err(WoldError::InvalidParams("level must be at least 1".into()));
    }
    let d = rep.dim_e();
    let v = rep.v();
    let its = iterates_v(rep, k, cfg)?;
    let vk = &its[k];
    let blocks = checked_pow(d, k - 1).expect("within budget");
    let defect = super::defect_operator(rep, cfg)?;
    let dd = &defect.d * &defect.d;
    let p1 = pinv(v, &cfg.tol) * v;
    let full = lift(blocks, &dd) * c64(d_k, 0.0) + lift(blocks, &p1) * c64(c, 0.0) - vk.adjoint() * vk;
    let (full_holds, full_min) = is_psd(&full, cfg)?;

    let q = Subspace::range(&v.adjoint(), &cfg.tol).lift(blocks);
    let a = lift(blocks, v);
    let n = a.ncols();
    let body = (a.adjoint() * &a - identity(n)) * c64(d_k, 0.0) + identity(n) * c64(c, 0.0) - vk.adjoint() * vk;
    let restricted = q.basis().adjoint() * body * q.basis();
    let (restricted_holds, restricted_min) = if restricted.nrows() == 0 {
        (true, f64::INFINITY)
    } else {
        is_psd(&restricted, cfg)?
    };
    Ok(RestrictedEquivalence {
        k,
        d_k,
        c,
        full_min_eigenvalue: full_min,
        restricted_min_eigenvalue: restricted_min,
        full_holds,
        restricted_holds,
    })
}

/// `‖Ṽ_kξ‖² ≤ ‖ξ‖² + k(‖(I_{E^{⊗k−1}}⊗Ṽ)ξ‖² − ‖ξ‖²)` as an operator inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerBoundCheck {
    pub k: usize,
    pub min_eigenvalue: f64,
    pub holds: bool,
}

pub fn concave_power_bound_check(rep: &Representation, k_max: usize, cfg: &Config) -> Result<Vec<PowerBoundCheck>> {
    let d = rep.dim_e();
    let its = iterates_v(rep, k_max, cfg)?;
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let blocks = checked_pow(d, k - 1).expect("within budget");
        let a = lift(blocks, rep.v());
        let n = a.ncols();
        let kf = k as f64;
        let op = identity(n) + (a.adjoint() * &a - identity(n)) * c64(kf, 0.0) - its[k].adjoint() * &its[k];
        let (holds, min) = is_psd(&op, cfg)?;
        out.push(PowerBoundCheck { k, min_eigenvalue: min, holds });
    }
    Ok(out)
}
