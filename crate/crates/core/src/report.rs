//! Machine-readable analysis of one representation or shift spec.
//!
//! The JSON form is the contract; [`AnalysisReport::text`] is a summary for
//! people. Identical input, flags and version give identical bytes.

use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::error::{Result, WoldError};
use crate::growth::{check_growth, gamma, gamma_at_least_one, GrowthReport};
use crate::linalg::{rank_warning, RankWarning};
use crate::model::{parse_representation, Config, Representation};
use crate::shifts::{
    build_shift, check_bilateral_weight_condition, check_unilateral_weight_condition, parse_shift_spec,
    shift_pipeline_at, BilateralSpec, IndexMapEntry, PipelineAssertion, ShiftSpec, UnilateralSpec,
};
use crate::shifts::build_bilateral_shift;
use crate::structure::{is_regular, BoundaryRegularity, RegularityReport, RegularityVerdict, Witness};
use crate::wold::{wold_decompose, WoldSummary};

pub const TOOL_NAME: &str = "woldkit";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What `analyze` accepts: a representation file or a shift spec file.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisInput {
    Representation(Representation),
    Shift(ShiftSpec),
}

impl AnalysisInput {
    /// Shift specs carry a `"kind"` field; anything else is read as a representation.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| WoldError::Parse(e.to_string()))?;
        if value.get("kind").is_some() {
            Ok(Self::Shift(parse_shift_spec(text)?))
        } else {
            Ok(Self::Representation(parse_representation(text)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputDescriptor {
    /// File name as given, without directories.
    pub source: Option<String>,
    /// `representation`, `unilateral` or `bilateral`.
    pub kind: String,
    pub dim_e: usize,
    pub dim_h: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    PreconditionFailed,
}

/// A report section that may not have run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Section<T> {
    Computed(T),
    Skipped { reason: String },
}

impl<T> Section<T> {
    pub fn computed(&self) -> Option<&T> {
        match self {
            Self::Computed(t) => Some(t),
            Self::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularitySection {
    pub verdict: RegularityVerdict,
    pub admissible: bool,
    /// Always true in finite dimensions.
    pub range_closed: bool,
    pub kernel_dim: usize,
    pub rinf_dim: usize,
    pub stabilization: usize,
    pub horizon: usize,
    pub kernel_inclusion_holds: bool,
    pub kernel_residual: f64,
    pub per_m: Vec<Witness>,
    pub anomaly: bool,
    pub boundary: Option<BoundaryRegularity>,
}

impl From<&RegularityReport> for RegularitySection {
    fn from(r: &RegularityReport) -> Self {
        Self {
            verdict: r.verdict(),
            admissible: r.admissible(),
            range_closed: true,
            kernel_dim: r.kernel_dim,
            rinf_dim: r.rinf_dim,
            stabilization: r.stabilization,
            horizon: r.horizon,
            kernel_inclusion_holds: r.kernel_inclusion_holds,
            kernel_residual: r.kernel_residual,
            per_m: r.per_m.clone(),
            anomaly: r.anomaly,
            boundary: r.boundary.clone(),
        }
    }
}

/// `γ` as a number, or the string `"inf"` for the zero operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma(pub f64);

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexMapSummary {
    pub entries: usize,
    pub in_window: usize,
    pub out_of_window: usize,
    pub map: Vec<IndexMapEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSection {
    pub kind: String,
    pub weight_condition_feasible: bool,
    /// Minimal multiplier per level, `null` where none exists.
    pub minimal_d: Vec<Option<f64>>,
    /// Unilateral only: `γ(Z_n) ≥ 1` per level.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_ok: Option<Vec<bool>>,
    /// Unilateral: pairs skipped for lack of weights. Bilateral: tuples leaving the window.
    pub skipped: usize,
    /// Bilateral only: fraction of enumerated tuples that stayed in the window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_map: Option<IndexMapSummary>,
    /// Empty when the decomposition did not run.
    pub assertions: Vec<PipelineAssertion>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    Rank(RankWarning),
    Boundary { message: String },
    Anomaly { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub tool: ToolInfo,
    pub input: InputDescriptor,
    pub config: Config,
    /// Levels used by the growth check and the decomposition.
    pub horizon: usize,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precondition_failure: Option<String>,
    pub regularity: RegularitySection,
    pub gamma: Gamma,
    pub growth: Section<GrowthReport>,
    pub wold: Section<WoldSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<ShiftSection>,
    pub warnings: Vec<Warning>,
}

/// Runs regularity, `γ`, growth and the decomposition in order, stopping at the
/// first failed hypothesis. Later sections are then marked skipped.
pub fn analyze(input: &AnalysisInput, source: Option<&str>, horizon: Option<usize>, cfg: &Config) -> Result<AnalysisReport> {
    let rep = match input {
        AnalysisInput::Representation(r) => r.clone(),
        AnalysisInput::Shift(s) => build_shift(s, cfg)?,
    };
    let kind = match input {
        AnalysisInput::Representation(_) => "representation",
        AnalysisInput::Shift(ShiftSpec::Unilateral(_)) => "unilateral",
        AnalysisInput::Shift(ShiftSpec::Bilateral(_)) => "bilateral",
    };
    let descriptor = InputDescriptor {
        source: source.map(str::to_string),
        kind: kind.into(),
        dim_e: rep.dim_e(),
        dim_h: rep.dim_h(),
    };

    let regularity = is_regular(&rep, cfg)?;
    let g = gamma(&rep, cfg);
    let max = cfg.max_level(rep.dim_e(), rep.dim_h()).max(1);
    let levels = horizon.unwrap_or(regularity.horizon).clamp(1, max);

    let mut warnings = Vec::new();
    if let Some(w) = rank_warning(rep.v(), &cfg.tol, "V") {
        warnings.push(Warning::Rank(w));
    }
    if regularity.verdict() == RegularityVerdict::RegularModuloBoundary {
        warnings.push(Warning::Boundary {
            message: "kernel directions created by truncation were set aside; verdicts near the boundary are labeled".into(),
        });
    }
    if regularity.anomaly {
        warnings.push(Warning::Anomaly {
            message: "per-level inclusion checks disagree with the primary regularity verdict".into(),
        });
    }

    let mut failure = None;
    let growth = if !regularity.admissible() {
        failure = Some("not regular: N(V) is not contained in E⊗R^∞".to_string());
        Section::Skipped { reason: "representation is not regular".into() }
    } else if !gamma_at_least_one(&rep, cfg) {
        failure = Some(format!("gamma(V) = {g} is below 1"));
        Section::Skipped { reason: "gamma is below 1".into() }
    } else {
        let report = check_growth(&rep, None, levels, 1.0, cfg)?;
        if let Some(bad) = report.levels.iter().find(|l| !l.feasible) {
            failure = Some(format!("growth inequality fails at level {}", bad.m));
        }
        Section::Computed(report)
    };

    let (wold, shift) = if let Some(reason) = &failure {
        let wold = Section::Skipped { reason: format!("precondition failed: {reason}") };
        let shift = match input {
            AnalysisInput::Shift(spec) => Some(shift_conditions(spec, Vec::new(), cfg)?),
            AnalysisInput::Representation(_) => None,
        };
        (wold, shift)
    } else {
        match input {
            AnalysisInput::Representation(_) => {
                let res = wold_decompose(&rep, None, Some(levels), cfg)?;
                (Section::Computed(res.summary()), None)
            }
            AnalysisInput::Shift(spec) => {
                let pipe = shift_pipeline_at(spec, Some(levels), cfg)?;
                let section = shift_conditions(spec, pipe.assertions.clone(), cfg)?;
                (Section::Computed(pipe.wold.summary()), Some(section))
            }
        }
    };
    if let Section::Computed(w) = &wold {
        if w.diagnostics.boundary && !warnings.iter().any(|w| matches!(w, Warning::Boundary { .. })) {
            warnings.push(Warning::Boundary { message: "decomposition diagnostics touch the truncation boundary".into() });
        }
    }

    Ok(AnalysisReport {
        tool: ToolInfo { name: TOOL_NAME, version: TOOL_VERSION },
        input: descriptor,
        config: *cfg,
        horizon: levels,
        status: if failure.is_some() { Status::PreconditionFailed } else { Status::Ok },
        precondition_failure: failure,
        regularity: RegularitySection::from(&regularity),
        gamma: Gamma(g),
        growth,
        wold,
        shift,
        warnings,
    })
}

fn shift_conditions(spec: &ShiftSpec, assertions: Vec<PipelineAssertion>, cfg: &Config) -> Result<ShiftSection> {
    match spec {
        ShiftSpec::Unilateral(s) => unilateral_section(s, assertions, cfg),
        ShiftSpec::Bilateral(s) => bilateral_section(s, assertions, cfg),
    }
}

fn unilateral_section(s: &UnilateralSpec, assertions: Vec<PipelineAssertion>, cfg: &Config) -> Result<ShiftSection> {
    let report = check_unilateral_weight_condition(s, None, s.levels, s.levels.saturating_sub(1), cfg)?;
    Ok(ShiftSection {
        kind: "unilateral".into(),
        weight_condition_feasible: report.feasible(),
        minimal_d: report.minimal_sequence(),
        gamma_ok: Some(report.gamma_ok.clone()),
        skipped: report.skipped,
        coverage: None,
        index_map: None,
        assertions,
    })
}

fn bilateral_section(s: &BilateralSpec, assertions: Vec<PipelineAssertion>, cfg: &Config) -> Result<ShiftSection> {
    let report = check_bilateral_weight_condition(s, None, s.radius.max(1))?;
    let build = build_bilateral_shift(s, cfg)?;
    let in_window = build.index_map.iter().filter(|e| e.in_window).count();
    Ok(ShiftSection {
        kind: "bilateral".into(),
        weight_condition_feasible: report.literal_feasible(),
        minimal_d: report.levels.iter().map(|l| l.literal_minimal_d).collect(),
        gamma_ok: None,
        skipped: report.levels.iter().map(|l| l.tuples_skipped).sum(),
        coverage: Some(report.coverage()),
        index_map: Some(IndexMapSummary {
            entries: build.index_map.len(),
            in_window,
            out_of_window: build.index_map.len() - in_window,
            map: build.index_map,
        }),
        assertions,
    })
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let src = self.input.source.as_deref().unwrap_or("<input>");
        out.push_str(&format!(
            "{} {}: {} {} (dim E = {}, dim H = {})\n",
            self.tool.name, self.tool.version, self.input.kind, src, self.input.dim_e, self.input.dim_h
        ));
        let r = &self.regularity;
        out.push_str(&format!(
            "regularity: {:?} (kernel dim {}, R^inf dim {}, stabilizes at {})\n",
            r.verdict, r.kernel_dim, r.rinf_dim, r.stabilization
        ));
        let g = if self.gamma.0.is_finite() { format!("{:.6}", self.gamma.0) } else { "inf".into() };
        out.push_str(&format!("gamma: {g}\n"));
        match &self.growth {
            Section::Computed(gr) => {
                let seq: Vec<String> = gr
                    .minimal_sequence()
                    .iter()
                    .map(|d| d.map_or("infeasible".into(), |d| format!("{d:.4}")))
                    .collect();
                out.push_str(&format!("growth: minimal d_m for m = 1..{}: [{}]\n", gr.horizon, seq.join(", ")));
                out.push_str(&format!("  partial sums of 1/d_m: {}\n", gr.divergence_note.pattern));
            }
            Section::Skipped { reason } => out.push_str(&format!("growth: skipped ({reason})\n")),
        }
        match &self.wold {
            Section::Computed(w) => {
                out.push_str(&format!(
                    "wold: dim W = {}, dim [W] = {}, dim R^inf = {}, all diagnostics hold: {}\n",
                    w.dim_w,
                    w.dim_bracket_w,
                    w.dim_rinf,
                    w.diagnostics.all_hold()
                ));
            }
            Section::Skipped { reason } => out.push_str(&format!("wold: skipped ({reason})\n")),
        }
        if let Some(s) = &self.shift {
            out.push_str(&format!("{} weight condition feasible: {}\n", s.kind, s.weight_condition_feasible));
            for a in &s.assertions {
                let tag = if a.boundary { " [boundary]" } else { "" };
                out.push_str(&format!("  {}: {}{}\n", a.name, a.holds, tag));
            }
        }
        for w in &self.warnings {
            let line = match w {
                Warning::Rank(r) => format!(
                    "rank: singular value {:e} of {} is near the cutoff {:e}",
                    r.singular_value, r.context, r.cutoff
                ),
                Warning::Boundary { message } => format!("boundary: {message}"),
                Warning::Anomaly { message } => format!("anomaly: {message}"),
            };
            out.push_str(&format!("warning: {line}\n"));
        }
        let status = match self.status {
            Status::Ok => "ok".to_string(),
            Status::PreconditionFailed => {
                format!("precondition failed: {}", self.precondition_failure.as_deref().unwrap_or(""))
            }
        };
        out.push_str(&format!("status: {status}\n"));
        out
    }
}
