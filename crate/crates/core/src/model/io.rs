use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Representation;
use crate::error::{Result, WoldError};
use crate::linalg::{c64, Matrix, C64};

/// On-disk layout of a representation. Complex numbers are `[re, im]` pairs and
/// matrices are flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationFile {
    #[serde(rename = "dim_E")]
    pub dim_e: usize,
    #[serde(rename = "dim_H")]
    pub dim_h: usize,
    #[serde(rename = "V")]
    pub v: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<BTreeMap<String, Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<BTreeMap<String, Vec<[f64; 2]>>>,
}

/// Row-major `rows×cols` matrix from `[re, im]` pairs.
pub fn complex_from_pairs(field: &str, pairs: &[[f64; 2]], rows: usize, cols: usize) -> Result<Matrix> {
    if pairs.len() != rows * cols {
        return Err(WoldError::Shape(format!(
            "field {field}: expected {} entries ({rows}x{cols}), found {}",
            rows * cols,
            pairs.len()
        )));
    }
    if let Some(k) = pairs.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(WoldError::Parse(format!("field {field}: entry {k} is not finite")));
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| {
        let p = pairs[i * cols + j];
        c64(p[0], p[1])
    }))
}

pub fn complex_to_pairs(a: &Matrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let z: C64 = a[(i, j)];
            // Normalize negative zero so output bytes do not depend on rounding history.
            out.push([z.re + 0.0, z.im + 0.0]);
        }
    }
    out
}

impl RepresentationFile {
    pub fn into_representation(self) -> Result<Representation> {
        let d = self.dim_e;
        let m = self.dim_h;
        let v = complex_from_pairs("V", &self.v, m, d * m)?;
        let rep = Representation::new(d, m, v)?;
        let sigma = self.sigma.unwrap_or_default();
        let phi = self.phi.unwrap_or_default();
        if sigma.is_empty() && phi.is_empty() {
            return Ok(rep);
        }
        let mut s = BTreeMap::new();
        for (label, pairs) in sigma {
            s.insert(label.clone(), complex_from_pairs(&format!("sigma.{label}"), &pairs, m, m)?);
        }
        let mut p = BTreeMap::new();
        for (label, pairs) in phi {
            p.insert(label.clone(), complex_from_pairs(&format!("phi.{label}"), &pairs, d, d)?);
        }
        rep.with_generators(s, p)
    }

    pub fn from_representation(rep: &Representation) -> Self {
        let gens = |map: &BTreeMap<String, Matrix>| {
            if map.is_empty() {
                None
            } else {
                Some(map.iter().map(|(k, a)| (k.clone(), complex_to_pairs(a))).collect())
            }
        };
        Self {
            dim_e: rep.dim_e(),
            dim_h: rep.dim_h(),
            v: complex_to_pairs(rep.v()),
            sigma: gens(rep.sigma()),
            phi: gens(rep.phi()),
        }
    }
}

pub fn parse_representation(text: &str) -> Result<Representation> {
    let file: RepresentationFile =
        serde_json::from_str(text).map_err(|e| WoldError::Parse(e.to_string()))?;
    file.into_representation()
}

/// Pretty-printed JSON; identical representations give identical bytes.
pub fn representation_to_json(rep: &Representation) -> String {
    let mut s = serde_json::to_string_pretty(&RepresentationFile::from_representation(rep))
        .expect("representation file serializes");
    s.push('\n');
    s
}

pub fn load_representation(path: impl AsRef<Path>) -> Result<Representation> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| WoldError::Parse(format!("{}: {e}", path.display())))?;
    parse_representation(&text)
}

pub fn save_representation(rep: &Representation, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, representation_to_json(rep))
        .map_err(|e| WoldError::Parse(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_everything() {
        let v = Matrix::from_fn(2, 4, |i, j| c64(i as f64 - 0.25 * j as f64, 1.0 / (1.0 + j as f64)));
        let mut sigma = BTreeMap::new();
        let mut phi = BTreeMap::new();
        sigma.insert("u".to_string(), Matrix::identity(2, 2));
        phi.insert("u".to_string(), Matrix::identity(2, 2));
        let rep = Representation::new(2, 2, v).unwrap().with_generators(sigma, phi).unwrap();
        let text = representation_to_json(&rep);
        let back = parse_representation(&text).unwrap();
        assert_eq!(back, rep);
        assert_eq!(representation_to_json(&back), text);
    }

    #[test]
    fn nan_token_is_a_parse_error() {
        let text = r#"{"dim_E":1,"dim_H":1,"V":[[NaN,0]]}"#;
        match parse_representation(text) {
            Err(WoldError::Parse(msg)) => assert!(msg.contains("line 1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_length_is_a_shape_error() {
        let text = r#"{"dim_E":1,"dim_H":2,"V":[[1,0],[0,0],[0,0]]}"#;
        assert!(matches!(parse_representation(text), Err(WoldError::Shape(_))));
    }

    #[test]
    fn overflowing_number_is_rejected() {
        let text = r#"{"dim_E":1,"dim_H":1,"V":[[1e999,0]]}"#;
        assert!(parse_representation(text).is_err());
    }
}
