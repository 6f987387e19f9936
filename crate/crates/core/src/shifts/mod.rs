//! Truncated unilateral Fock shifts and bilateral weighted shifts, their weight
//! conditions, and the end-to-end decomposition pipeline.

mod bilateral;
mod unilateral;

pub use bilateral::{
    build_bilateral_shift, check_bilateral_weight_condition, check_condition_i, path_indices,
    BilateralBuild, BilateralConditionReport, BilateralLevel, BilateralSpec, IndexMapEntry,
};
pub use unilateral::{
    build_unilateral_shift, check_unilateral_weight_condition, z_product, UnilateralConditionReport,
    UnilateralLevel, UnilateralPair, UnilateralSpec,
};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WoldError};
use crate::linalg::{c64, checked_pow};
use crate::model::{complex_from_pairs, complex_to_pairs, Config, Representation};
use crate::wold::{wold_decompose, WoldResult};

#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSpec {
    Unilateral(UnilateralSpec),
    Bilateral(BilateralSpec),
}

/// On-disk layout, tagged by `"kind"`. Matrices are row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShiftSpecFile {
    Unilateral {
        d: usize,
        #[serde(rename = "L")]
        levels: usize,
        p: usize,
        #[serde(rename = "Z")]
        z: Vec<Vec<[f64; 2]>>,
    },
    Bilateral {
        n: usize,
        #[serde(rename = "M")]
        radius: usize,
        w: Vec<Vec<[f64; 2]>>,
    },
}

impl ShiftSpecFile {
    pub fn into_spec(self) -> Result<ShiftSpec> {
        match self {
            Self::Unilateral { d, levels, p, z } => {
                if z.len() != levels {
                    return Err(WoldError::Parse(format!("expected {levels} weight matrices, found {}", z.len())));
                }
                let z = z
                    .iter()
                    .enumerate()
                    .map(|(k, pairs)| {
                        let size = checked_pow(d, k + 1)
                            .ok_or_else(|| WoldError::InvalidParams("d^k overflows".into()))?;
                        complex_from_pairs(&format!("Z[{k}]"), pairs, size, size)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ShiftSpec::Unilateral(UnilateralSpec::new(d, levels, p, z)?))
            }
            Self::Bilateral { n, radius, w } => {
                if let Some((i, bad)) = w.iter().enumerate().find_map(|(i, row)| {
                    row.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()).map(|k| (i, k))
                }) {
                    return Err(WoldError::Parse(format!("w[{i}][{bad}] is not finite")));
                }
                let w = w.iter().map(|row| row.iter().map(|p| c64(p[0], p[1])).collect()).collect();
                Ok(ShiftSpec::Bilateral(BilateralSpec::new(n, radius, w)?))
            }
        }
    }

    pub fn from_spec(spec: &ShiftSpec) -> Self {
        match spec {
            ShiftSpec::Unilateral(s) => Self::Unilateral {
                d: s.d,
                levels: s.levels,
                p: s.p,
                z: s.z.iter().map(complex_to_pairs).collect(),
            },
            ShiftSpec::Bilateral(s) => Self::Bilateral {
                n: s.n,
                radius: s.radius,
                w: s.w.iter().map(|row| row.iter().map(|z| [z.re + 0.0, z.im + 0.0]).collect()).collect(),
            },
        }
    }
}

pub fn parse_shift_spec(text: &str) -> Result<ShiftSpec> {
    let file: ShiftSpecFile = serde_json::from_str(text).map_err(|e| WoldError::Parse(e.to_string()))?;
    file.into_spec()
}

pub fn shift_spec_to_json(spec: &ShiftSpec) -> String {
    let mut s = serde_json::to_string_pretty(&ShiftSpecFile::from_spec(spec)).expect("spec serializes");
    s.push('\n');
    s
}

pub fn build_shift(spec: &ShiftSpec, cfg: &Config) -> Result<Representation> {
    match spec {
        ShiftSpec::Unilateral(s) => build_unilateral_shift(s, cfg),
        ShiftSpec::Bilateral(s) => Ok(build_bilateral_shift(s, cfg)?.rep),
    }
}

/// A structural claim checked by [`shift_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineAssertion {
    pub name: String,
    pub holds: bool,
    /// Only meaningful away from the truncation boundary.
    pub boundary: bool,
}

#[derive(Debug, Clone)]
pub struct ShiftPipelineReport {
    pub rep: Representation,
    pub wold: WoldResult,
    pub unilateral: Option<UnilateralConditionReport>,
    pub bilateral: Option<BilateralConditionReport>,
    pub index_map: Vec<IndexMapEntry>,
    pub assertions: Vec<PipelineAssertion>,
}

impl ShiftPipelineReport {
    pub fn all_hold(&self) -> bool {
        self.assertions.iter().all(|a| a.holds)
    }
}

/// Builds the shift, checks its weight condition, decomposes it, and asserts
/// the structure the weight condition predicts.
///
/// Unilateral: `R^∞ = {0}` and `[W]` covers every level below the top.
/// Bilateral: `R^∞` reduces and the restriction to it is unitary.
pub fn shift_pipeline(spec: &ShiftSpec, cfg: &Config) -> Result<ShiftPipelineReport> {
    shift_pipeline_at(spec, None, cfg)
}

/// [`shift_pipeline`] with an explicit decomposition horizon.
pub fn shift_pipeline_at(spec: &ShiftSpec, horizon: Option<usize>, cfg: &Config) -> Result<ShiftPipelineReport> {
    let tol = &cfg.tol;
    match spec {
        ShiftSpec::Unilateral(s) => {
            let rep = build_unilateral_shift(s, cfg)?;
            let report = check_unilateral_weight_condition(s, None, s.levels, s.levels.saturating_sub(1), cfg)?;
            let wold = wold_decompose(&rep, None, horizon, cfg)?;
            let mut assertions = vec![PipelineAssertion {
                name: "weight condition feasible".into(),
                holds: report.feasible(),
                boundary: false,
            }];
            if report.feasible() {
                assertions.push(PipelineAssertion {
                    name: "generalized range is zero".into(),
                    holds: wold.rinf.is_zero(),
                    boundary: false,
                });
                assertions.push(PipelineAssertion {
                    name: "[W] covers the levels below the top".into(),
                    holds: s.levels_below(s.levels).is_within(&wold.bracket_w, tol)?,
                    boundary: true,
                });
            }
            Ok(ShiftPipelineReport { rep, wold, unilateral: Some(report), bilateral: None, index_map: Vec::new(), assertions })
        }
        ShiftSpec::Bilateral(s) => {
            let build = build_bilateral_shift(s, cfg)?;
            let k_max = s.radius.max(1);
            let report = check_bilateral_weight_condition(s, None, k_max)?;
            let wold = wold_decompose(&build.rep, None, horizon, cfg)?;
            let boundary = wold.diagnostics.boundary;
            let mut assertions = vec![PipelineAssertion {
                name: "weight condition feasible".into(),
                holds: report.literal_feasible(),
                boundary: false,
            }];
            if report.literal_feasible() {
                assertions.push(PipelineAssertion {
                    name: "generalized range reduces".into(),
                    holds: wold.diagnostics.reduces,
                    boundary,
                });
                assertions.push(PipelineAssertion {
                    name: "restriction to generalized range is unitary".into(),
                    holds: wold.diagnostics.unitary_restriction,
                    boundary,
                });
            }
            Ok(ShiftPipelineReport {
                rep: build.rep,
                wold,
                unilateral: None,
                bilateral: Some(report),
                index_map: build.index_map,
                assertions,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Subspace;
    use crate::wold::wandering_space;

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn spec_files_round_trip() {
        let text = r#"{"kind":"bilateral","n":1,"M":1,"w":[[[1,0],[0,0],[1.5,0]]]}"#;
        let spec = parse_shift_spec(text).unwrap();
        assert_eq!(parse_shift_spec(&shift_spec_to_json(&spec)).unwrap(), spec);
        let text = r#"{"kind":"unilateral","d":1,"L":2,"p":1,"Z":[[[2,0]],[[3,0]]]}"#;
        let spec = parse_shift_spec(text).unwrap();
        assert_eq!(parse_shift_spec(&shift_spec_to_json(&spec)).unwrap(), spec);
    }

    #[test]
    fn malformed_specs() {
        let short = r#"{"kind":"bilateral","n":1,"M":1,"w":[[[1,0],[0,0]]]}"#;
        assert!(matches!(parse_shift_spec(short), Err(WoldError::Parse(_))));
        let missing = r#"{"kind":"unilateral","d":1,"L":2,"p":1,"Z":[[[2,0]]]}"#;
        assert!(matches!(parse_shift_spec(missing), Err(WoldError::Parse(_))));
        assert!(matches!(parse_shift_spec(r#"{"kind":"other"}"#), Err(WoldError::Parse(_))));
    }

    #[test]
    fn classical_shift_pipeline() {
        let spec = ShiftSpec::Unilateral(UnilateralSpec::unweighted(1, 4, 1).unwrap());
        let report = shift_pipeline(&spec, &cfg()).unwrap();
        assert!(report.all_hold(), "{:?}", report.assertions);
        assert_eq!(report.wold.bracket_w.dim(), 5);
        assert!(report.wold.w.same_as(&Subspace::coordinates(5, &[0]), &cfg().tol).unwrap());
    }

    #[test]
    fn fock_shift_wandering_is_vacuum_level() {
        let spec = UnilateralSpec::unweighted(2, 2, 1).unwrap();
        let rep = build_unilateral_shift(&spec, &cfg()).unwrap();
        assert!(wandering_space(&rep, &cfg()).same_as(&spec.levels_below(1), &cfg().tol).unwrap());
        let report = shift_pipeline(&ShiftSpec::Unilateral(spec), &cfg()).unwrap();
        assert!(report.all_hold());
    }

    #[test]
    fn bilateral_pipeline_single_generator() {
        let spec = BilateralSpec::unit(1, 3).unwrap();
        let report = shift_pipeline(&ShiftSpec::Bilateral(spec.clone()), &cfg()).unwrap();
        assert!(report.all_hold(), "{:?}", report.assertions);
        // Range is everything but e_{-3} and e_1, so those span W.
        assert!(report.wold.w.same_as(&spec.basis_span(&[-3, 1]), &cfg().tol).unwrap());
        assert!(report.wold.rinf.is_zero());
        assert_eq!(report.wold.bracket_w.dim(), 7);
        assert!(report.wold.diagnostics.boundary);
    }

    #[test]
    fn bilateral_pipeline_two_generators() {
        let spec = BilateralSpec::unit(2, 3).unwrap();
        let report = shift_pipeline(&ShiftSpec::Bilateral(spec.clone()), &cfg()).unwrap();
        assert!(report.all_hold(), "{:?}", report.assertions);
        let tol = cfg().tol;
        assert!(report.wold.rinf.same_as(&spec.basis_span(&[-3, -2, -1, 0]), &tol).unwrap());
        assert!(report.wold.w.same_as(&spec.basis_span(&[1, 2]), &tol).unwrap());
        assert!(report.wold.bracket_w.same_as(&spec.basis_span(&[1, 2, 3]), &tol).unwrap());
    }
}
