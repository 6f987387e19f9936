//! Seeded property suites. Each suite draws `count` instances from its own
//! stream, checks one family of claims on every instance, and aggregates the
//! outcomes in instance order regardless of how the work was scheduled.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Result, WoldError};
use crate::gen::{
    bilateral_spec, block_instance, concave, gaussian_matrix, instance_rng, left_invertible, purity_pair, random_of_rank,
    random_rep, regular_instance,
};
use crate::growth::{GrowthShape, check_concave, check_expansive, minimal_growth_sequence, norm_identity_residuals, telescoping_residuals};
use crate::linalg::{op_norm, penrose_residuals, pinv, reduced_min_modulus, svd_info, Matrix, Subspace};
use crate::model::{complex_to_pairs, representation_to_json, Config, Representation};
use crate::shifts::{
    build_bilateral_shift, check_unilateral_weight_condition, shift_pipeline, shift_spec_to_json, ShiftSpec,
    UnilateralSpec,
};
use crate::structure::{is_biregular, is_regular, kernel_lift_identity, make_generalized_inverse, power_identity_residuals};
use crate::wold::{
    check_preconditions, duality_corollary_check, kernel_span_check, pure_equivalence_harness, wold_decompose, WoldResult,
};

/// Fraction of purity pairs that must reach a verdict on both sides.
pub const MIN_DECIDED_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Penrose,
    KernelLift,
    GeninvPower,
    NormIdentity,
    Telescoping,
    Wold,
    WoldPool,
    Duality,
    Concave,
    Purity,
    ShiftClosedForms,
    Bilateral,
}

impl Suite {
    pub const ALL: [Suite; 12] = [
        Suite::Penrose,
        Suite::KernelLift,
        Suite::GeninvPower,
        Suite::NormIdentity,
        Suite::Telescoping,
        Suite::Wold,
        Suite::WoldPool,
        Suite::Duality,
        Suite::Concave,
        Suite::Purity,
        Suite::ShiftClosedForms,
        Suite::Bilateral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Penrose => "penrose",
            Suite::KernelLift => "kernel-lift",
            Suite::GeninvPower => "geninv-power",
            Suite::NormIdentity => "norm-identity",
            Suite::Telescoping => "telescoping",
            Suite::Wold => "wold",
            Suite::WoldPool => "wold-pool",
            Suite::Duality => "duality",
            Suite::Concave => "concave",
            Suite::Purity => "purity",
            Suite::ShiftClosedForms => "shift-closed-forms",
            Suite::Bilateral => "bilateral",
        }
    }

    /// One line on what an instance of the suite checks.
    pub fn claim(self) -> &'static str {
        match self {
            Suite::Penrose => "pinv satisfies the four Penrose equations and gamma(A)·‖A†‖ = 1",
            Suite::KernelLift => "kernel lift identity at (1,1),(1,2),(2,1); regularity verdicts agree across levels",
            Suite::GeninvPower => "V_n S^(n) V_n = V_n for n ≤ 3, and S^(n) V_n S^(n) = S^(n) when bi-regular",
            Suite::NormIdentity => "norm identity for left-invertible V with gamma > 1, n ≤ 4, full basis",
            Suite::Telescoping => "both telescoping identities for left-invertible V with gamma > 1, n ≤ 4",
            Suite::Wold => "H = [W] ⊕ R^∞ with all diagnostics; block instances recover their blocks",
            Suite::WoldPool => "decomposition on a mixed pool; instances failing the hypotheses are filtered",
            Suite::Duality => "[W] as a join of dagger kernels and as a dual generalized range; kernel spans",
            Suite::Concave => "concave instances are expansive and decompose with a unitary restriction",
            Suite::Purity => "A pure iff its compression to W is pure, for A commuting with a shift",
            Suite::ShiftClosedForms => "scalar growth and unilateral weight multipliers match their closed forms",
            Suite::Bilateral => "bilateral shifts: kernel, regularity, orthogonal ranges, pipeline",
        }
    }

    pub fn parse(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Self::ALL.to_vec());
        }
        Self::ALL.iter().copied().find(|s| s.name() == name).map(|s| vec![s]).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|s| s.name()).collect();
            WoldError::InvalidParams(format!("unknown suite {name:?}; expected all or one of {}", names.join(", ")))
        })
    }

    fn family(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Outcome {
    Pass,
    Fail(String),
    Filtered(String),
}

struct Instance {
    outcome: Outcome,
    data: Value,
    /// Purity suite only: both verdicts decided.
    decided: Option<bool>,
}

impl Instance {
    fn new(data: Value) -> Self {
        Self { outcome: Outcome::Pass, data, decided: None }
    }

    /// Records the first failed check.
    fn check(&mut self, holds: bool, what: impl FnOnce() -> String) {
        if !holds && self.outcome == Outcome::Pass {
            self.outcome = Outcome::Fail(what());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceFailure {
    pub index: usize,
    pub message: String,
    /// Serialized instance, enough to reproduce the failure.
    pub instance: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub claim: String,
    pub seed: u64,
    pub count: usize,
    pub passed: usize,
    pub failed: usize,
    pub filtered: usize,
    pub notes: Vec<String>,
    /// A suite-level requirement beyond the per-instance checks failed.
    pub suite_failure: Option<String>,
    pub failures: Vec<InstanceFailure>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.failed == 0 && self.suite_failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub count: usize,
    pub config: Config,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.suites.iter().all(SuiteReport::ok)
    }

    /// Pass/fail matrix plus the failing instances.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            out.push_str(&format!(
                "{:<20} {}  passed {:>3}  failed {:>3}  filtered {:>3}\n",
                s.suite,
                if s.ok() { "PASS" } else { "FAIL" },
                s.passed,
                s.failed,
                s.filtered
            ));
            for note in &s.notes {
                out.push_str(&format!("    note: {note}\n"));
            }
            if let Some(f) = &s.suite_failure {
                out.push_str(&format!("    suite requirement failed: {f}\n"));
            }
            for f in &s.failures {
                out.push_str(&format!("    instance {}: {}\n      {}\n", f.index, f.message, f.instance));
            }
        }
        out
    }
}

pub fn verify(suites: &[Suite], count: usize, seed: u64, cfg: &Config) -> VerifyReport {
    let suites = suites.iter().map(|&s| run_suite(s, count, seed, cfg)).collect();
    VerifyReport { seed, count, config: *cfg, suites }
}

pub fn run_suite(suite: Suite, count: usize, seed: u64, cfg: &Config) -> SuiteReport {
    let instances: Vec<Instance> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(seed, suite.family(), i as u64);
            run_instance(suite, i, &mut rng, cfg).unwrap_or_else(|e| Instance {
                outcome: Outcome::Fail(format!("error: {e}")),
                data: Value::Null,
                decided: None,
            })
        })
        .collect();
    let mut report = SuiteReport {
        suite: suite.name().to_string(),
        claim: suite.claim().to_string(),
        seed,
        count,
        passed: 0,
        failed: 0,
        filtered: 0,
        notes: Vec::new(),
        suite_failure: None,
        failures: Vec::new(),
    };
    let mut filter_reasons = std::collections::BTreeMap::<String, usize>::new();
    for (index, inst) in instances.iter().enumerate() {
        match &inst.outcome {
            Outcome::Pass => report.passed += 1,
            Outcome::Filtered(why) => {
                report.filtered += 1;
                *filter_reasons.entry(why.clone()).or_default() += 1;
            }
            Outcome::Fail(message) => {
                report.failed += 1;
                report.failures.push(InstanceFailure { index, message: message.clone(), instance: inst.data.clone() });
            }
        }
    }
    if report.filtered > 0 {
        report.notes.push(format!("coverage {}/{} instances admitted", count - report.filtered, count));
        for (why, n) in filter_reasons {
            report.notes.push(format!("filtered {n}: {why}"));
        }
    }
    if suite == Suite::Purity && count > 0 {
        let decided = instances.iter().filter(|i| i.decided == Some(true)).count();
        report.notes.push(format!("decided {decided}/{count}"));
        if (decided as f64) < MIN_DECIDED_FRACTION * count as f64 {
            report.suite_failure = Some(format!(
                "only {decided} of {count} pairs decided, need {:.0}%",
                MIN_DECIDED_FRACTION * 100.0
            ));
        }
    }
    report
}

fn rep_value(rep: &Representation) -> Value {
    serde_json::from_str(&representation_to_json(rep)).expect("representation JSON is valid")
}

fn run_instance(suite: Suite, index: usize, rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    match suite {
        Suite::Penrose => penrose(rng, cfg),
        Suite::KernelLift => kernel_lift(rng, cfg),
        Suite::GeninvPower => geninv_power(rng, cfg),
        Suite::NormIdentity => norm_identity(rng, cfg),
        Suite::Telescoping => telescoping(rng, cfg),
        Suite::Wold => wold_blocks(rng, cfg),
        Suite::WoldPool => wold_pool(rng, cfg),
        Suite::Duality => duality(rng, cfg),
        Suite::Concave => concave_suite(rng, cfg),
        Suite::Purity => purity(rng, cfg),
        Suite::ShiftClosedForms => closed_forms(index, rng, cfg),
        Suite::Bilateral => bilateral(index, rng, cfg),
    }
}

/// Matrices up to 12×20, rank chosen below full about half the time.
fn penrose(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let rows = rng.gen_range(1..=12);
    let cols = rng.gen_range(1..=20);
    let full = rows.min(cols);
    let rank = if rng.gen_bool(0.5) { full } else { rng.gen_range(0..=full) };
    let a = random_of_rank(rng, rows, cols, rank, 0.1, 10.0);
    let mut inst = Instance::new(json!({ "rows": rows, "cols": cols, "rank": rank, "A": complex_to_pairs(&a) }));
    let tol = &cfg.tol;
    let x = pinv(&a, tol);
    let bound = 1e-9 * op_norm(&a).max(1.0);
    let r = penrose_residuals(&a, &x);
    inst.check(r.iter().all(|&v| v <= bound), || format!("Penrose residuals {r:?} exceed {bound:e}"));
    let got = svd_info(&a, tol).rank;
    inst.check(got == rank, || format!("numerical rank {got}, constructed rank {rank}"));
    if rank > 0 {
        let product = reduced_min_modulus(&a, tol) * op_norm(&x);
        inst.check((product - 1.0).abs() <= 1e-8, || format!("gamma(A)·‖A†‖ = {product}"));
    }
    Ok(inst)
}

fn kernel_lift(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let d = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=4);
    let rep = random_rep(rng, d, m)?;
    let mut inst = Instance::new(rep_value(&rep));
    for (a, b) in [(1, 1), (1, 2), (2, 1)] {
        let check = kernel_lift_identity(&rep, a, b, cfg)?;
        inst.check(check.equal, || format!("kernel lift identity fails at (m,n) = ({a},{b}): {check:?}"));
    }
    let report = is_regular(&rep, cfg)?;
    inst.check(!report.anomaly, || "per-level regularity verdicts disagree with the kernel inclusion".into());
    Ok(inst)
}

fn geninv_power(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let rep = regular_instance(rng, cfg)?;
    let (d, m) = (rep.dim_e(), rep.dim_h());
    let mut inst = Instance::new(rep_value(&rep));
    let mut biregular_seen = 0;
    for trial in 0..5 {
        let y = gaussian_matrix(rng, d * m, m);
        let gi = make_generalized_inverse(&rep, &y, cfg)?;
        let biregular = is_biregular(&rep, &gi, 3, cfg)?.holds;
        biregular_seen += biregular as usize;
        for r in power_identity_residuals(&rep, &gi, 3, cfg)? {
            inst.check(r.first <= 1e-8, || format!("trial {trial}, n = {}: ‖V_n S V_n − V_n‖ rel {:e}", r.n, r.first));
            if biregular {
                inst.check(r.second <= 1e-8, || {
                    format!("trial {trial}, n = {}: ‖S V_n S − S‖ rel {:e} on a bi-regular pair", r.n, r.second)
                });
            }
        }
    }
    inst.data["biregular_trials"] = json!(biregular_seen);
    Ok(inst)
}

fn norm_identity(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let m = rng.gen_range(2..=5);
    let rep = left_invertible(rng, m, 1.1)?;
    let mut inst = Instance::new(rep_value(&rep));
    for r in norm_identity_residuals(&rep, 4, cfg)? {
        inst.check(r.max_relative <= 1e-7, || format!("n = {}: relative residual {:e}", r.n, r.max_relative));
    }
    Ok(inst)
}

fn telescoping(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let m = rng.gen_range(2..=5);
    let rep = left_invertible(rng, m, 1.1)?;
    let mut inst = Instance::new(rep_value(&rep));
    for r in telescoping_residuals(&rep, 4, cfg)? {
        inst.check(r.range_side <= 1e-8 && r.domain_side <= 1e-8, || {
            format!("n = {}: residuals {:e}, {:e}", r.n, r.range_side, r.domain_side)
        });
    }
    Ok(inst)
}

/// Checks shared by every successful decomposition.
fn check_decomposition(inst: &mut Instance, res: &WoldResult) {
    let diag = &res.diagnostics;
    inst.check(diag.projector_sum_residual <= 1e-8, || {
        format!("‖P_[W] + P_R − I‖ = {:e}", diag.projector_sum_residual)
    });
    inst.check(diag.projector_product_residual <= 1e-8, || {
        format!("‖P_[W] P_R‖ = {:e}", diag.projector_product_residual)
    });
    inst.check(diag.all_hold(), || format!("diagnostics failed: {diag:?}"));
    inst.check(res.biregular.as_ref().is_none_or(|b| b.holds), || "decomposable instance reported not bi-regular".into());
}

fn wold_blocks(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let block = block_instance(rng)?;
    let mut inst = Instance::new(json!({
        "sizes": block.sizes,
        "kinds": block.kinds,
        "rep": rep_value(&block.rep),
    }));
    let tol = &cfg.tol;
    let res = wold_decompose(&block.rep, None, None, cfg)?;
    check_decomposition(&mut inst, &res);
    inst.check(res.bracket_w.same_as(&block.shift_part(), tol)?, || {
        format!("[W] has dimension {}, shift blocks span {}", res.bracket_w.dim(), block.shift_part().dim())
    });
    inst.check(res.rinf.same_as(&block.unitary_part(), tol)?, || {
        format!("R^∞ has dimension {}, unitary blocks span {}", res.rinf.dim(), block.unitary_part().dim())
    });
    Ok(inst)
}

/// Generic draws including `γ < 1` and irregular ones; those are filtered.
fn wold_pool(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let rep = match rng.gen_range(0..4) {
        0 => block_instance(rng)?.rep,
        1 => {
            let m = rng.gen_range(1..=4);
            left_invertible(rng, m, 0.3)?
        }
        _ => {
            let d = rng.gen_range(1..=2);
            let m = rng.gen_range(1..=4);
            random_rep(rng, d, m)?
        }
    };
    let mut inst = Instance::new(rep_value(&rep));
    let pre = match check_preconditions(&rep, None, None, cfg) {
        Ok(pre) => pre,
        Err(WoldError::PreconditionFailed(msg)) => {
            // Keep the hypothesis name, drop the instance-specific numbers.
            let why = msg.split([':', '=']).next().unwrap_or_default().trim().to_string();
            inst.outcome = Outcome::Filtered(why);
            return Ok(inst);
        }
        Err(other) => return Err(other),
    };
    if pre.growth.divergence_note.shape == GrowthShape::Geometric {
        inst.outcome = Outcome::Filtered("multipliers grow geometrically, so their reciprocals sum".into());
        return Ok(inst);
    }
    let res = wold_decompose(&rep, None, None, cfg)?;
    check_decomposition(&mut inst, &res);
    Ok(inst)
}

fn duality(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let rep = if rng.gen_bool(0.5) {
        block_instance(rng)?.rep
    } else {
        let m = rng.gen_range(1..=4);
        concave(rng, m, 0.3)?
    };
    let mut inst = Instance::new(rep_value(&rep));
    let dual = duality_corollary_check(&rep, None, cfg)?;
    inst.check(dual.holds(), || format!("{dual:?}"));
    for n in 1..=2 {
        let span = kernel_span_check(&rep, n, cfg)?;
        inst.check(span.dagger_kernel_contained, || format!("n = {n}: dagger kernel not contained"));
        inst.check(!span.regular || span.kernel_equal, || format!("n = {n}: kernel spans differ on a regular rep"));
    }
    Ok(inst)
}

fn concave_suite(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let m = rng.gen_range(1..=5);
    let eps = rng.gen_range(0.05..0.5);
    let rep = concave(rng, m, eps)?;
    let mut inst = Instance::new(rep_value(&rep));
    inst.check(check_concave(&rep, cfg)?, || "generator output is not concave".into());
    inst.check(check_expansive(&rep, cfg)?, || "concave instance is not expansive".into());
    match wold_decompose(&rep, None, None, cfg) {
        Ok(res) => {
            check_decomposition(&mut inst, &res);
            inst.check(res.diagnostics.isometric_on_rinf, || "restriction to R^∞ is not isometric".into());
            inst.check(res.diagnostics.fully_coisometric_on_rinf, || "restriction to R^∞ is not co-isometric".into());
        }
        Err(e) => inst.check(false, || format!("decomposition failed: {e}")),
    }
    Ok(inst)
}

fn purity(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let pair = purity_pair(rng)?;
    let mut inst = Instance::new(json!({ "rep": rep_value(&pair.rep), "A": complex_to_pairs(&pair.a) }));
    let report = pure_equivalence_harness(&pair.rep, &pair.a, 64, cfg)?;
    inst.decided = Some(report.decided);
    inst.check(!report.violation, || {
        format!("A is {:?} but its compression is {:?}", report.operator.verdict, report.compression.verdict)
    });
    Ok(inst)
}

/// `(c^{2k} − 1)/(c² − 1)`, the geometric sum `1 + c² + … + c^{2(k−1)}`.
pub fn scalar_multiplier(c: f64, k: usize) -> f64 {
    (0..k).map(|j| c.powi(2 * j as i32)).sum()
}

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-9 * want.abs().max(1.0)
}

/// Instance 0 is the fixed table (`Ṽ = 2`, `c ∈ {1.1, 2}`); the rest draw `c`.
fn closed_forms(index: usize, rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let (growth_cs, weight_cs): (Vec<f64>, Vec<f64>) =
        if index == 0 { (vec![2.0], vec![1.1, 2.0]) } else { (vec![rng.gen_range(1.05..3.0)], vec![rng.gen_range(1.05..3.0)]) };
    let mut inst = Instance::new(json!({ "scalar_V": growth_cs, "weights": weight_cs }));
    for &a in &growth_cs {
        let rep = Representation::new(1, 1, Matrix::from_element(1, 1, crate::linalg::c64(a, 0.0)))?;
        for (i, got) in minimal_growth_sequence(&rep, 3, cfg)?.into_iter().enumerate() {
            let want = scalar_multiplier(a, i + 1);
            inst.check(got.is_some_and(|g| close(g, want)), || format!("V = {a}, m = {}: {got:?} vs {want}", i + 1));
        }
    }
    for &c in &weight_cs {
        let spec = UnilateralSpec::scalar(5, 1, &[c; 5])?;
        let report = check_unilateral_weight_condition(&spec, None, 4, 1, cfg)?;
        for level in &report.levels {
            let want = scalar_multiplier(c, level.k);
            inst.check(level.minimal_d.is_some_and(|g| close(g, want)), || {
                format!("c = {c}, k = {}: {:?} vs {want}", level.k, level.minimal_d)
            });
        }
    }
    Ok(inst)
}

/// Even instances use unit weights, odd ones random weights; `n` alternates 1, 2.
fn bilateral(index: usize, rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Instance> {
    let n = 1 + (index / 2) % 2;
    let radius = 3;
    let spec = bilateral_spec(rng, n, radius, index % 2 == 1)?;
    let data: Value = serde_json::from_str(&shift_spec_to_json(&ShiftSpec::Bilateral(spec.clone())))
        .expect("spec JSON is valid");
    let mut inst = Instance::new(data);
    let tol = &cfg.tol;
    let build = build_bilateral_shift(&spec, cfg)?;
    let rep = &build.rep;
    let ambient = n * spec.dim_h();
    let zero_cols: Vec<usize> = (1..=n).map(|i| spec.column(i, 0)).collect();
    let interior = rep.interior_kernel(tol);
    inst.check(interior.same_as(&Subspace::coordinates(ambient, &zero_cols), tol)?, || {
        format!("interior kernel has dimension {}, expected {n}", interior.dim())
    });
    let mut all_zero = zero_cols.clone();
    all_zero.extend(&rep.truncation().expect("bilateral builds are truncated").boundary_columns);
    all_zero.sort_unstable();
    let kernel = Subspace::kernel(rep.v(), tol);
    inst.check(kernel.same_as(&Subspace::coordinates(ambient, &all_zero), tol)?, || {
        format!("kernel has dimension {}, expected {}", kernel.dim(), all_zero.len())
    });
    let regularity = is_regular(rep, cfg)?;
    inst.check(regularity.admissible(), || format!("regularity verdict {:?}", regularity.verdict()));
    let width = spec.dim_h();
    let ranges: Vec<Subspace> =
        (0..n).map(|i| Subspace::range(&rep.v().columns(i * width, width).into_owned(), tol)).collect();
    for i in 0..n {
        for j in i + 1..n {
            inst.check(ranges[i].is_orthogonal_to(&ranges[j], tol)?, || format!("ranges of S_{} and S_{} overlap", i + 1, j + 1));
        }
    }
    let pipeline = shift_pipeline(&ShiftSpec::Bilateral(spec), cfg)?;
    inst.check(pipeline.all_hold(), || format!("pipeline assertions: {:?}", pipeline.assertions));
    inst.check(pipeline.assertions.iter().skip(1).all(|a| a.boundary), || "diagnostics not labeled with the boundary".into());
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::parse(s.name()).unwrap(), vec![s]);
        }
        assert_eq!(Suite::parse("all").unwrap().len(), Suite::ALL.len());
        assert!(Suite::parse("nope").is_err());
    }

    #[test]
    fn scalar_multiplier_matches_closed_form() {
        for c in [1.1f64, 2.0, 3.0] {
            for k in 1..=5 {
                let closed = (c.powi(2 * k as i32) - 1.0) / (c * c - 1.0);
                assert!((scalar_multiplier(c, k) - closed).abs() < 1e-12 * closed);
            }
        }
        assert_eq!(scalar_multiplier(2.0, 3), 21.0);
    }

    #[test]
    fn small_runs_pass_and_are_deterministic() {
        let cfg = Config::default();
        for s in Suite::ALL {
            let a = run_suite(s, 3, 5, &cfg);
            assert!(a.ok(), "{}", VerifyReport { seed: 5, count: 3, config: cfg, suites: vec![a.clone()] }.text());
            assert_eq!(a, run_suite(s, 3, 5, &cfg));
        }
    }

    #[test]
    fn corrupted_psd_tolerance_is_detected() {
        let mut cfg = Config::default();
        cfg.tol.psd = 1e-30;
        let report = run_suite(Suite::Concave, 6, 1, &cfg);
        assert!(!report.ok());
        assert!(report.failures.iter().all(|f| f.instance.is_object()));
    }

    #[test]
    fn pool_filters_and_reports_coverage() {
        let report = run_suite(Suite::WoldPool, 16, 2, &Config::default());
        assert!(report.ok(), "{:?}", report.failures);
        assert!(report.filtered > 0);
        assert!(report.notes[0].starts_with("coverage"));
    }
}
