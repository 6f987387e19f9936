//! Wandering subspaces, the decomposition `H = [W]_Ṽ ⊕ R^∞`, its duality
//! statements, and intertwining contractions.

mod intertwine;

pub use intertwine::{
    cauchy_dual, check_intertwiner, invariant_witness, is_pure_contraction, pure_equivalence_harness,
    IntertwinerCheck, InvariantWitness, PureEquivalenceReport, PurityReport, PurityVerdict,
};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WoldError};
use crate::growth::{check_growth, gamma, gamma_at_least_one, GrowthReport};
use crate::linalg::{checked_pow, identity, op_norm, pinv, Matrix, Subspace};
use crate::model::{iterates_v, Config, Representation};
use crate::structure::{power_noise_scale, stabilize};
use crate::structure::{
    dagger_iterates, generalized_range, is_biregular, is_hyper_dagger, is_regular,
    make_generalized_inverse, translate, BiregularityReport, RegularityReport, RegularityVerdict,
};

/// `W = N(Ṽ*)`, the orthogonal complement of the range.
pub fn wandering_space(rep: &Representation, cfg: &Config) -> Subspace {
    Subspace::range(rep.v(), &cfg.tol).complement()
}

/// `W† = N(Ṽ)`.
pub fn wandering_dagger(rep: &Representation, cfg: &Config) -> Subspace {
    Subspace::kernel(rep.v(), &cfg.tol)
}

/// `S ⊥ Ṽ_n(E^{⊗n}⊗S)` for `1 ≤ n ≤ horizon` (clamped to the budget).
pub fn is_wandering(rep: &Representation, s: &Subspace, horizon: usize, cfg: &Config) -> Result<bool> {
    if s.ambient() != rep.dim_h() {
        return Err(WoldError::DimensionMismatch("subspace must live in H".into()));
    }
    if s.is_zero() {
        return Ok(true);
    }
    let d = rep.dim_e();
    let reach = horizon.min(cfg.max_level(d, rep.dim_h()));
    let its = iterates_v(rep, reach, cfg)?;
    for (n, vn) in its.iter().enumerate().skip(1) {
        let blocks = checked_pow(d, n).expect("within budget");
        let translate = s.lift(blocks).image(vn, &cfg.tol)?;
        if !s.is_orthogonal_to(&translate, &cfg.tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `[S]_Ṽ`, the smallest subspace containing `S` and closed under `K ↦ Ṽ(E⊗K)`.
pub fn generated_subspace(rep: &Representation, s: &Subspace, cfg: &Config) -> Result<Subspace> {
    if s.ambient() != rep.dim_h() {
        return Err(WoldError::DimensionMismatch("subspace must live in H".into()));
    }
    let (chain, start) = stabilize(
        |_, prev| {
            let base = prev.unwrap_or(s);
            base.sum(&translate(rep, base, cfg)?, &cfg.tol)
        },
        rep.dim_h(),
        cfg,
    )?;
    Ok(chain[start - 1].clone())
}

/// Join of `Ṽ_n(E^{⊗n}⊗S)` for `0 ≤ n ≤ levels`, from the explicit iterates.
pub fn generated_by_iterates(
    rep: &Representation,
    s: &Subspace,
    levels: usize,
    cfg: &Config,
) -> Result<Subspace> {
    let d = rep.dim_e();
    let its = iterates_v(rep, levels, cfg)?;
    let mut acc = s.clone();
    for (n, vn) in its.iter().enumerate().skip(1) {
        let blocks = checked_pow(d, n).expect("within budget");
        acc = acc.sum(&s.lift(blocks).image(vn, &cfg.tol)?, &cfg.tol)?;
    }
    Ok(acc)
}

/// Numerical diagnostics attached to a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoldDiagnostics {
    pub orthogonal: bool,
    /// `[W]_Ṽ + R^∞ = H`, by rank of the joined bases.
    pub spans_h: bool,
    pub reduces: bool,
    /// `Ṽ` maps `(E⊗R^∞) ∩ N(Ṽ)^⊥` unitarily onto `R^∞`.
    pub unitary_restriction: bool,
    pub dagger_equals_adjoint_on_rinf: bool,
    pub isometric_on_rinf: bool,
    pub fully_coisometric_on_rinf: bool,
    /// `‖P_[W] + P_R − I‖`.
    pub projector_sum_residual: f64,
    /// `‖P_[W]P_R‖`.
    pub projector_product_residual: f64,
    pub unitary_residual: f64,
    pub dagger_residual: f64,
    /// The regularity hypothesis only holds once the truncation boundary is set aside.
    pub boundary: bool,
    /// Set when every tested level is n-dagger, under which the decomposition is unique.
    pub uniqueness_note: Option<String>,
}

impl WoldDiagnostics {
    /// Every structural diagnostic holds.
    pub fn all_hold(&self) -> bool {
        self.orthogonal
            && self.spans_h
            && self.reduces
            && self.unitary_restriction
            && self.dagger_equals_adjoint_on_rinf
    }
}

#[derive(Debug, Clone)]
pub struct WoldResult {
    pub w: Subspace,
    pub w_dagger: Subspace,
    pub bracket_w: Subspace,
    pub rinf: Subspace,
    pub diagnostics: WoldDiagnostics,
    pub regularity: RegularityReport,
    pub gamma: f64,
    pub growth: GrowthReport,
    /// Absent when only regular modulo the boundary.
    pub biregular: Option<BiregularityReport>,
    pub hyper_dagger: bool,
    pub horizon: usize,
}

/// Dimensions and flags of a [`WoldResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoldSummary {
    pub dim_w: usize,
    pub dim_w_dagger: usize,
    pub dim_bracket_w: usize,
    pub dim_rinf: usize,
    pub diagnostics: WoldDiagnostics,
    pub biregular: Option<bool>,
    pub hyper_dagger: bool,
    pub horizon: usize,
}

impl WoldResult {
    pub fn summary(&self) -> WoldSummary {
        WoldSummary {
            dim_w: self.w.dim(),
            dim_w_dagger: self.w_dagger.dim(),
            dim_bracket_w: self.bracket_w.dim(),
            dim_rinf: self.rinf.dim(),
            diagnostics: self.diagnostics.clone(),
            biregular: self.biregular.as_ref().map(|b| b.holds),
            hyper_dagger: self.hyper_dagger,
            horizon: self.horizon,
        }
    }
}

/// Hypotheses of the decomposition, checked in order.
#[derive(Debug, Clone)]
pub struct Preconditions {
    pub regularity: RegularityReport,
    pub gamma: f64,
    pub growth: GrowthReport,
    pub horizon: usize,
}

/// Regularity (possibly modulo the truncation boundary), `γ(Ṽ) ≥ 1`, and the
/// growth inequality at every level up to the horizon, either for the supplied
/// multipliers or for some multiplier.
pub fn check_preconditions(
    rep: &Representation,
    d_seq: Option<&[f64]>,
    horizon: Option<usize>,
    cfg: &Config,
) -> Result<Preconditions> {
    let regularity = is_regular(rep, cfg)?;
    if !regularity.admissible() {
        return Err(WoldError::PreconditionFailed(
            "not regular: N(V) is not contained in E⊗R^∞".into(),
        ));
    }
    let g = gamma(rep, cfg);
    if !gamma_at_least_one(rep, cfg) {
        return Err(WoldError::PreconditionFailed(format!("gamma(V) = {g} is below 1")));
    }
    let max = cfg.max_level(rep.dim_e(), rep.dim_h()).max(1);
    let horizon = horizon.unwrap_or(regularity.horizon).clamp(1, max);
    let levels = d_seq.map_or(horizon, |s| s.len().min(horizon));
    let growth = check_growth(rep, d_seq, levels, 1.0, cfg)?;
    if let Some(bad) = growth.levels.iter().find(|l| !l.feasible || l.supplied_holds == Some(false)) {
        return Err(WoldError::PreconditionFailed(format!("growth inequality fails at level {}", bad.m)));
    }
    Ok(Preconditions { regularity, gamma: g, growth, horizon })
}

pub fn wold_decompose(
    rep: &Representation,
    d_seq: Option<&[f64]>,
    horizon: Option<usize>,
    cfg: &Config,
) -> Result<WoldResult> {
    let pre = check_preconditions(rep, d_seq, horizon, cfg)?;
    let tol = &cfg.tol;
    let d = rep.dim_e();
    let m = rep.dim_h();
    let v = rep.v();
    let vp = pinv(v, tol);

    let w = wandering_space(rep, cfg);
    let w_dagger = wandering_dagger(rep, cfg);
    let rinf = generalized_range(rep, cfg)?;
    let bracket_w = generated_subspace(rep, &w, cfg)?;

    let p_w = bracket_w.projector();
    let p_r = rinf.projector();
    let projector_sum_residual = op_norm(&(&p_w + &p_r - identity(m)));
    let projector_product_residual = op_norm(&(&p_w * &p_r));
    let orthogonal = bracket_w.is_orthogonal_to(&rinf, tol)?;
    let spans_h = bracket_w.sum(&rinf, tol)?.dim() == m;

    let lifted = rinf.lift(d);
    let forward = translate(rep, &rinf, cfg)?.is_within(&rinf, tol)?;
    let backward = Subspace::range_scaled(&(v.adjoint() * rinf.basis()), tol, op_norm(v)).is_within(&lifted, tol)?;
    let reduces = forward && backward;

    let dagger_residual = column_max(&((&vp - v.adjoint()) * rinf.basis()));
    let dagger_equals_adjoint_on_rinf = dagger_residual <= 1e-8;

    let domain = lifted.intersect(&Subspace::range(&v.adjoint(), tol), tol)?;
    let b = v * domain.basis();
    let unitary_residual = if domain.dim() != rinf.dim() {
        f64::INFINITY
    } else if domain.is_zero() {
        0.0
    } else {
        let k = domain.dim();
        op_norm(&(b.adjoint() * &b - identity(k))).max(op_norm(&(&b * b.adjoint() - &p_r)))
    };
    let unitary_restriction = unitary_residual <= 1e-8;

    let (isometric_on_rinf, fully_coisometric_on_rinf) = if rinf.is_zero() {
        (true, true)
    } else {
        let q = rinf.basis();
        let restricted = q.adjoint() * v * crate::linalg::lift(d, q);
        let k = rinf.dim();
        (
            op_norm(&(restricted.adjoint() * &restricted - identity(d * k))) <= 1e-8,
            op_norm(&(&restricted * restricted.adjoint() - identity(k))) <= 1e-8,
        )
    };

    let boundary = pre.regularity.verdict() == RegularityVerdict::RegularModuloBoundary;
    let biregular = if pre.regularity.is_regular() {
        let gi = make_generalized_inverse(rep, &Matrix::zeros(d * m, m), cfg)?;
        Some(is_biregular(rep, &gi, pre.horizon, cfg)?)
    } else {
        None
    };
    let hyper_dagger = is_hyper_dagger(rep, pre.horizon, cfg)?;
    let uniqueness_note = hyper_dagger.then(|| {
        format!("n-dagger for every n <= {}; the decomposition is unique", pre.horizon)
    });

    let diagnostics = WoldDiagnostics {
        orthogonal,
        spans_h,
        reduces,
        unitary_restriction,
        dagger_equals_adjoint_on_rinf,
        isometric_on_rinf,
        fully_coisometric_on_rinf,
        projector_sum_residual,
        projector_product_residual,
        unitary_residual,
        dagger_residual,
        boundary,
        uniqueness_note,
    };
    Ok(WoldResult {
        w,
        w_dagger,
        bracket_w,
        rinf,
        diagnostics,
        regularity: pre.regularity,
        gamma: pre.gamma,
        growth: pre.growth,
        biregular,
        hyper_dagger,
        horizon: pre.horizon,
    })
}

fn column_max(a: &Matrix) -> f64 {
    a.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `[W]_Ṽ` against the join of `N(Ṽ^{†(n)})` and against `R^∞` of the
/// representation with matrix `Ṽ^{†*}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityCheck {
    pub horizon: usize,
    pub kernel_join_equal: bool,
    pub dual_rinf_complement_equal: bool,
}

impl DualityCheck {
    pub fn holds(&self) -> bool {
        self.kernel_join_equal && self.dual_rinf_complement_equal
    }
}

pub fn duality_corollary_check(rep: &Representation, horizon: Option<usize>, cfg: &Config) -> Result<DualityCheck> {
    let result = wold_decompose(rep, None, horizon, cfg)?;
    let tol = &cfg.tol;
    let m = rep.dim_h();
    let daggers = dagger_iterates(rep, result.horizon, cfg)?;
    let dagger_norm = op_norm(&daggers[1]);
    let mut join = Subspace::zero(m);
    for (n, t) in daggers.iter().enumerate().skip(1) {
        join = join.sum(&Subspace::kernel_scaled(t, tol, power_noise_scale(dagger_norm, n)), tol)?;
    }
    let kernel_join_equal = join.same_as(&result.bracket_w, tol)?;
    let dual = rep.with_matrix(pinv(rep.v(), tol).adjoint())?;
    let dual_rinf = generalized_range(&dual, cfg)?;
    let dual_rinf_complement_equal = dual_rinf.complement().same_as(&result.bracket_w, tol)?;
    Ok(DualityCheck { horizon: result.horizon, kernel_join_equal, dual_rinf_complement_equal })
}

/// Kernel spans at level `n`:
/// `N(Ṽ^{†(n)}) ⊆ ⋁_{i<n} Ṽ_i(E^{⊗i}⊗W)` and, for regular representations,
/// `N(Ṽ_n) = ⋁_{i<n} (I_{E^{⊗n−i}}⊗Ṽ^{†(i)})(E^{⊗n−i−1}⊗W†)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpanCheck {
    pub n: usize,
    pub dagger_kernel_contained: bool,
    pub kernel_equal: bool,
    /// The second statement is only claimed for regular representations.
    pub regular: bool,
}

pub fn kernel_span_check(rep: &Representation, n: usize, cfg: &Config) -> Result<KernelSpanCheck> {
    if n == 0 {
        return Err(WoldError::InvalidParams("level must be at least 1".into()));
    }
    let tol = &cfg.tol;
    let d = rep.dim_e();
    let m = rep.dim_h();
    let its = iterates_v(rep, n, cfg)?;
    let daggers = dagger_iterates(rep, n, cfg)?;
    let w = wandering_space(rep, cfg);
    let w_dagger = wandering_dagger(rep, cfg);

    let mut span = Subspace::zero(m);
    for (i, vi) in its.iter().enumerate().take(n) {
        let blocks = checked_pow(d, i).expect("within budget");
        span = span.sum(&w.lift(blocks).image(vi, tol)?, tol)?;
    }
    let dagger_scale = power_noise_scale(op_norm(&daggers[1]), n);
    let dagger_kernel_contained = Subspace::kernel_scaled(&daggers[n], tol, dagger_scale).is_within(&span, tol)?;

    let mut kspan = Subspace::zero(its[n].ncols());
    for (i, ti) in daggers.iter().enumerate().take(n) {
        let outer = checked_pow(d, n - i - 1).expect("within budget");
        let source = w_dagger.lift(outer);
        let map = crate::linalg::lift(checked_pow(d, n - i).expect("within budget"), ti);
        kspan = kspan.sum(&source.image(&map, tol)?, tol)?;
    }
    let scale = power_noise_scale(op_norm(rep.v()), n);
    let kernel_equal = Subspace::kernel_scaled(&its[n], tol, scale).same_as(&kspan, tol)?;
    let regular = is_regular(rep, cfg)?.is_regular();
    Ok(KernelSpanCheck { n, dagger_kernel_contained, kernel_equal, regular })
}

/// The wandering subspace `K ⊖ Ṽ(E⊗K)` of an invariant subspace `K`.
#[derive(Debug, Clone)]
pub struct InvariantWandering {
    pub w: Subspace,
    /// `[W_K]_Ṽ = K`.
    pub regenerates: bool,
}

pub fn invariant_to_wandering(rep: &Representation, k: &Subspace, cfg: &Config) -> Result<InvariantWandering> {
    let tol = &cfg.tol;
    if k.ambient() != rep.dim_h() {
        return Err(WoldError::DimensionMismatch("subspace must live in H".into()));
    }
    let image = translate(rep, k, cfg)?;
    let residual = image.residual_outside(k)?;
    if residual > tol.sub {
        return Err(WoldError::NotInvariant { residual });
    }
    let w = image.complement().intersect(k, tol)?;
    let regenerates = generated_subspace(rep, &w, cfg)?.same_as(k, tol)?;
    Ok(InvariantWandering { w, regenerates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, from_real_rows};

    fn cfg() -> Config {
        Config::default()
    }

    fn shift(n: usize) -> Matrix {
        Matrix::from_fn(n, n, |i, j| if i == j + 1 { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
    }

    fn truncated_shift(n: usize) -> Representation {
        use crate::model::Truncation;
        Representation::new(1, n, shift(n))
            .unwrap()
            .with_truncation(Truncation { boundary_columns: vec![n - 1], safe_depth: n - 1 })
            .unwrap()
    }

    fn rotation() -> Matrix {
        let (c, s) = (0.6, 0.8);
        from_real_rows(&[&[c, -s], &[s, c]])
    }

    #[test]
    fn wandering_of_shift_is_first_vector() {
        let w = wandering_space(&truncated_shift(4), &cfg());
        assert!(w.same_as(&Subspace::coordinates(4, &[0]), &cfg().tol).unwrap());
        let surj = Representation::new(2, 2, from_real_rows(&[&[1.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 1.0]])).unwrap();
        assert!(wandering_space(&surj, &cfg()).is_zero());
    }

    #[test]
    fn wandering_tests() {
        let rep = truncated_shift(4);
        assert!(is_wandering(&rep, &Subspace::zero(4), 5, &cfg()).unwrap());
        assert!(is_wandering(&rep, &wandering_space(&rep, &cfg()), 5, &cfg()).unwrap());
        assert!(!is_wandering(&rep, &Subspace::full(4), 5, &cfg()).unwrap());
    }

    #[test]
    fn generated_subspaces() {
        let rep = truncated_shift(4);
        assert!(generated_subspace(&rep, &Subspace::zero(4), &cfg()).unwrap().is_zero());
        let full = generated_subspace(&rep, &Subspace::coordinates(4, &[0]), &cfg()).unwrap();
        assert_eq!(full.dim(), 4);
        let by_its = generated_by_iterates(&rep, &Subspace::coordinates(4, &[0]), 4, &cfg()).unwrap();
        assert!(full.same_as(&by_its, &cfg().tol).unwrap());
    }

    #[test]
    fn block_of_shift_and_rotation() {
        let parts = [truncated_shift(3), Representation::new(1, 2, rotation()).unwrap()];
        let rep = Representation::direct_sum(&parts).unwrap();
        let result = wold_decompose(&rep, None, None, &cfg()).unwrap();
        let tol = cfg().tol;
        assert!(result.bracket_w.same_as(&Representation::block_subspace(&[3, 2], 0), &tol).unwrap());
        assert!(result.rinf.same_as(&Representation::block_subspace(&[3, 2], 1), &tol).unwrap());
        let dg = &result.diagnostics;
        assert!(dg.all_hold(), "{dg:?}");
        assert!(dg.boundary);
        assert!(dg.isometric_on_rinf && dg.fully_coisometric_on_rinf);
        assert!(dg.projector_sum_residual < 1e-8 && dg.projector_product_residual < 1e-8);
    }

    #[test]
    fn pure_shift_decomposition() {
        let result = wold_decompose(&truncated_shift(5), None, None, &cfg()).unwrap();
        assert_eq!(result.bracket_w.dim(), 5);
        assert!(result.rinf.is_zero());
        assert!(result.diagnostics.all_hold());
    }

    #[test]
    fn coisometry_decomposition() {
        // Surjective with d = 2: everything is generalized range.
        let s = 0.5f64.sqrt();
        let rep = Representation::new(2, 2, from_real_rows(&[&[s, 0.0, s, 0.0], &[0.0, s, 0.0, -s]])).unwrap();
        let result = wold_decompose(&rep, None, None, &cfg()).unwrap();
        assert!(result.w.is_zero());
        assert_eq!(result.rinf.dim(), 2);
        assert!(result.diagnostics.all_hold());
        assert!(result.diagnostics.fully_coisometric_on_rinf);
        assert_eq!(result.biregular.as_ref().map(|b| b.holds), Some(true));
    }

    #[test]
    fn preconditions_are_named() {
        let half = Representation::new(1, 1, from_real_rows(&[&[0.5]])).unwrap();
        match wold_decompose(&half, None, None, &cfg()) {
            Err(WoldError::PreconditionFailed(msg)) => assert!(msg.contains("gamma")),
            other => panic!("{other:?}"),
        }
        let nil = Representation::new(1, 2, shift(2)).unwrap();
        match wold_decompose(&nil, None, None, &cfg()) {
            Err(WoldError::PreconditionFailed(msg)) => assert!(msg.contains("regular")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duality_on_shift_and_unitary() {
        let c = duality_corollary_check(&truncated_shift(4), None, &cfg()).unwrap();
        assert!(c.holds(), "{c:?}");
        let u = Representation::new(1, 2, rotation()).unwrap();
        assert!(duality_corollary_check(&u, None, &cfg()).unwrap().holds());
    }

    #[test]
    fn kernel_spans() {
        let rep = truncated_shift(4);
        let c = kernel_span_check(&rep, 1, &cfg()).unwrap();
        assert!(c.dagger_kernel_contained);
        let c = kernel_span_check(&rep, 2, &cfg()).unwrap();
        assert!(c.dagger_kernel_contained);
        let s = 0.5f64.sqrt();
        let surj = Representation::new(2, 2, from_real_rows(&[&[s, 0.0, s, 0.0], &[0.0, s, 0.0, -s]])).unwrap();
        let c = kernel_span_check(&surj, 2, &cfg()).unwrap();
        assert!(c.regular && c.kernel_equal && c.dagger_kernel_contained, "{c:?}");
    }

    #[test]
    fn invariant_subspace_wandering() {
        let rep = truncated_shift(4);
        let k = Subspace::coordinates(4, &[2, 3]);
        let iw = invariant_to_wandering(&rep, &k, &cfg()).unwrap();
        assert!(iw.w.same_as(&Subspace::coordinates(4, &[2]), &cfg().tol).unwrap());
        assert!(iw.regenerates);
        let full = invariant_to_wandering(&rep, &Subspace::full(4), &cfg()).unwrap();
        assert!(full.w.same_as(&wandering_space(&rep, &cfg()), &cfg().tol).unwrap());
        assert!(invariant_to_wandering(&rep, &Subspace::zero(4), &cfg()).unwrap().w.is_zero());
        let bad = Subspace::coordinates(4, &[0]);
        assert!(matches!(invariant_to_wandering(&rep, &bad, &cfg()), Err(WoldError::NotInvariant { .. })));
    }
}
