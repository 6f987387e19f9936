use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WoldError};
use crate::linalg::{c64, zeros, Subspace, C64};
use crate::model::{Config, Representation, Truncation};

/// Weighted shift `δ_i⊗e_m ↦ w_{i,m} e_{i+nm}` on the window `|m| ≤ M`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilateralSpec {
    pub n: usize,
    /// Window radius `M`.
    pub radius: usize,
    /// `w[i-1][m+M] = w_{i,m}`.
    pub w: Vec<Vec<C64>>,
}

impl BilateralSpec {
    pub fn new(n: usize, radius: usize, w: Vec<Vec<C64>>) -> Result<Self> {
        if n == 0 {
            return Err(WoldError::InvalidParams("n must be positive".into()));
        }
        if w.len() != n {
            return Err(WoldError::Parse(format!("expected {n} weight rows, found {}", w.len())));
        }
        let width = 2 * radius + 1;
        if let Some(i) = w.iter().position(|row| row.len() != width) {
            return Err(WoldError::Parse(format!(
                "weight row {} has {} entries, expected {width}",
                i + 1,
                w[i].len()
            )));
        }
        Ok(Self { n, radius, w })
    }

    /// Weights equal to one except `w_{i,0} = 0`.
    pub fn unit(n: usize, radius: usize) -> Result<Self> {
        Self::from_fn(n, radius, |_, m| if m == 0 { 0.0 } else { 1.0 })
    }

    /// Real weights from `f(i, m)` with `i` counted from one.
    pub fn from_fn(n: usize, radius: usize, f: impl Fn(usize, i64) -> f64) -> Result<Self> {
        let r = radius as i64;
        let w = (1..=n).map(|i| (-r..=r).map(|m| c64(f(i, m), 0.0)).collect()).collect();
        Self::new(n, radius, w)
    }

    pub fn dim_h(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn in_window(&self, m: i64) -> bool {
        m.unsigned_abs() as usize <= self.radius
    }

    pub fn weight(&self, i: usize, m: i64) -> C64 {
        self.w[i - 1][(m + self.radius as i64) as usize]
    }

    /// Coordinate of `e_m` in `H`.
    pub fn coordinate(&self, m: i64) -> usize {
        (m + self.radius as i64) as usize
    }

    /// Coordinate of `δ_i⊗e_m` in `E⊗H`.
    pub fn column(&self, i: usize, m: i64) -> usize {
        (i - 1) * self.dim_h() + self.coordinate(m)
    }

    /// `span{e_m}` for the listed `m`.
    pub fn basis_span(&self, ms: &[i64]) -> Subspace {
        let idx: Vec<usize> = ms.iter().map(|&m| self.coordinate(m)).collect();
        Subspace::coordinates(self.dim_h(), &idx)
    }
}

/// One entry of the index map `g(i, m) = i + n·m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMapEntry {
    pub i: usize,
    pub m: i64,
    pub target: i64,
    pub in_window: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilateralBuild {
    pub rep: Representation,
    pub index_map: Vec<IndexMapEntry>,
    /// Number of `(i, m)` whose target stays in the window.
    pub in_window_domain: usize,
}

/// Columns whose target leaves the window are zero and form the truncation boundary.
pub fn build_bilateral_shift(spec: &BilateralSpec, cfg: &Config) -> Result<BilateralBuild> {
    let n = spec.n;
    let m_dim = spec.dim_h();
    cfg.check_columns(n.saturating_mul(m_dim))?;
    let r = spec.radius as i64;
    let mut v = zeros(m_dim, n * m_dim);
    let mut index_map = Vec::with_capacity(n * m_dim);
    let mut boundary = Vec::new();
    for i in 1..=n {
        for m in -r..=r {
            let target = i as i64 + n as i64 * m;
            let in_window = spec.in_window(target);
            let col = spec.column(i, m);
            if in_window {
                v[(spec.coordinate(target), col)] = spec.weight(i, m);
            } else {
                boundary.push(col);
            }
            index_map.push(IndexMapEntry { i, m, target, in_window });
        }
    }
    let in_window_domain = index_map.iter().filter(|e| e.in_window).count();
    let rep = Representation::new(n, m_dim, v)?
        .with_truncation(Truncation { boundary_columns: boundary, safe_depth: spec.radius })?;
    Ok(BilateralBuild { rep, index_map, in_window_domain })
}

/// Condition (i): `w_{i,m} = 1` for `m < 0`, `w_{i,0} = 0`, `|w_{i,m}| ≥ 1` for `m > 0`.
pub fn check_condition_i(spec: &BilateralSpec) -> Result<()> {
    let r = spec.radius as i64;
    for i in 1..=spec.n {
        for m in -r..=r {
            let w = spec.weight(i, m);
            let reason = if m < 0 && (w - c64(1.0, 0.0)).norm() > 1e-12 {
                Some(format!("weight {w} should be 1 for negative m"))
            } else if m == 0 && w.norm() > 1e-12 {
                Some(format!("weight {w} should be 0 at m = 0"))
            } else if m > 0 && w.norm() < 1.0 - 1e-12 {
                Some(format!("weight {w} has modulus below 1"))
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(WoldError::ConditionIViolated { i, m, reason });
            }
        }
    }
    Ok(())
}

/// The chain of indices visited by `δ_{i_1}⊗…⊗δ_{i_k}⊗e_m` under `Ṽ_k`:
/// `[m, n_{k,k}, n_{k−1,k}, …, n_{1,k}]` with
/// `n_{p,k} = Σ_{l=p}^{k} n^{l−p} i_l + n^{k−p+1} m`.
pub fn path_indices(n: usize, word: &[usize], m: i64) -> Vec<i64> {
    let mut out = Vec::with_capacity(word.len() + 1);
    let mut cur = m;
    out.push(cur);
    for &i in word.iter().rev() {
        cur = i as i64 + n as i64 * cur;
        out.push(cur);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilateralLevel {
    pub k: usize,
    pub tuples_checked: usize,
    /// Tuples with a weight index outside the window.
    pub tuples_skipped: usize,
    /// Smallest `d_k` satisfying the weight inequality read literally, where the
    /// first weight `w_{i_k,m}` enters the product twice.
    pub literal_minimal_d: Option<f64>,
    /// Smallest `d_k` for the growth inequality of the operator itself, where the
    /// path product counts every weight once.
    pub exact_minimal_d: Option<f64>,
    pub supplied_d: Option<f64>,
    /// Tuples failing the literal inequality at `supplied_d`.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilateralConditionReport {
    pub levels: Vec<BilateralLevel>,
}

impl BilateralConditionReport {
    pub fn literal_feasible(&self) -> bool {
        self.levels.iter().all(|l| l.literal_minimal_d.is_some())
    }

    pub fn exact_feasible(&self) -> bool {
        self.levels.iter().all(|l| l.exact_minimal_d.is_some())
    }

    pub fn coverage(&self) -> f64 {
        let checked: usize = self.levels.iter().map(|l| l.tuples_checked).sum();
        let skipped: usize = self.levels.iter().map(|l| l.tuples_skipped).sum();
        if checked + skipped == 0 {
            1.0
        } else {
            checked as f64 / (checked + skipped) as f64
        }
    }

    pub fn exact_sequence(&self) -> Vec<Option<f64>> {
        self.levels.iter().map(|l| l.exact_minimal_d).collect()
    }
}

/// Smallest `d ≥ 0` with `lhs ≤ d·slope`, over tuples folded into `acc`.
fn fold_minimal(acc: Option<f64>, lhs: f64, slope: f64) -> Option<f64> {
    let slack = 1e-12 * lhs.abs().max(1.0);
    let need = if slope > 1e-12 {
        Some((lhs / slope).max(0.0))
    } else if lhs <= slack {
        Some(0.0)
    } else {
        None
    };
    match (acc, need) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    }
}

/// Enumerates words `(i_1..i_k)` and `m ≠ 0` in the window for `k ≤ k_max`
/// and checks `(w_{i_k,m}² ∏_{q<k} w_{i_{k−q}, n_{k−q+1,k}}²) − 1 ≤ d_k(w_{i_k,m}² − 1)`.
/// `d_seq[k-1]` is the supplied `d_k`.
pub fn check_bilateral_weight_condition(
    spec: &BilateralSpec,
    d_seq: Option<&[f64]>,
    k_max: usize,
) -> Result<BilateralConditionReport> {
    check_condition_i(spec)?;
    let n = spec.n;
    let r = spec.radius as i64;
    let levels = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let words = n.checked_pow(k as u32).ok_or_else(|| WoldError::BudgetExceeded {
                needed: usize::MAX,
                budget: usize::MAX,
            })?;
            let supplied_d = d_seq.and_then(|s| s.get(k - 1)).copied();
            let mut level = BilateralLevel {
                k,
                tuples_checked: 0,
                tuples_skipped: 0,
                literal_minimal_d: Some(0.0),
                exact_minimal_d: Some(0.0),
                supplied_d,
                violations: 0,
            };
            let mut word = vec![0usize; k];
            for code in 0..words {
                let mut c = code;
                for slot in word.iter_mut() {
                    *slot = c % n + 1;
                    c /= n;
                }
                for m in (-r..=r).filter(|&m| m != 0) {
                    let path = path_indices(n, &word, m);
                    // Weights are read at m and at every intermediate index; the
                    // final index is only a target.
                    if path[..k].iter().any(|&x| !spec.in_window(x)) {
                        level.tuples_skipped += 1;
                        continue;
                    }
                    level.tuples_checked += 1;
                    let first = spec.weight(word[k - 1], m).norm_sqr();
                    let mut exact = 1.0;
                    for (step, &idx) in path[..k].iter().enumerate() {
                        exact *= spec.weight(word[k - 1 - step], idx).norm_sqr();
                    }
                    let literal = first * exact;
                    let slope = first - 1.0;
                    level.literal_minimal_d = fold_minimal(level.literal_minimal_d, literal - 1.0, slope);
                    level.exact_minimal_d = fold_minimal(level.exact_minimal_d, exact - 1.0, slope);
                    if let Some(dk) = supplied_d {
                        if literal - 1.0 > dk * slope + 1e-12 * literal.max(1.0) {
                            level.violations += 1;
                        }
                    }
                }
            }
            Ok(level)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BilateralConditionReport { levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Subspace;

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn killed_and_out_of_window_columns() {
        let spec = BilateralSpec::from_fn(1, 2, |_, m| if m == 0 { 0.0 } else { 1.0 }).unwrap();
        let build = build_bilateral_shift(&spec, &cfg()).unwrap();
        let v = build.rep.v();
        for m in [-2i64, -1, 1] {
            let col = spec.column(1, m);
            assert_eq!(v[(spec.coordinate(1 + m), col)], c64(1.0, 0.0));
            assert!((v.column(col).norm() - 1.0).abs() < 1e-15);
        }
        assert_eq!(v.column(spec.column(1, 0)).norm(), 0.0);
        assert_eq!(v.column(spec.column(1, 2)).norm(), 0.0);
        assert_eq!(build.rep.truncation().unwrap().boundary_columns, vec![spec.column(1, 2)]);
        assert_eq!(build.in_window_domain, 4);
    }

    #[test]
    fn kernel_is_zero_index_plus_boundary() {
        for n in [1usize, 2, 3] {
            let spec = BilateralSpec::unit(n, 3).unwrap();
            let build = build_bilateral_shift(&spec, &cfg()).unwrap();
            let mut cols: Vec<usize> = (1..=n).map(|i| spec.column(i, 0)).collect();
            cols.extend(&build.rep.truncation().unwrap().boundary_columns);
            let expect = Subspace::coordinates(n * spec.dim_h(), &cols);
            let kernel = Subspace::kernel(build.rep.v(), &cfg().tol);
            assert!(kernel.same_as(&expect, &cfg().tol).unwrap());
            let interior: Vec<usize> = (1..=n).map(|i| spec.column(i, 0)).collect();
            let expect = Subspace::coordinates(n * spec.dim_h(), &interior);
            assert!(build.rep.interior_kernel(&cfg().tol).same_as(&expect, &cfg().tol).unwrap());
        }
    }

    #[test]
    fn generator_ranges_are_orthogonal() {
        let spec = BilateralSpec::from_fn(2, 1, |i, m| if m == 0 { 0.0 } else { 1.0 + 0.5 * i as f64 * m.max(0) as f64 }).unwrap();
        let build = build_bilateral_shift(&spec, &cfg()).unwrap();
        let m = spec.dim_h();
        let s1 = build.rep.v().columns(0, m).into_owned();
        let s2 = build.rep.v().columns(m, m).into_owned();
        let r1 = Subspace::range(&s1, &cfg().tol);
        let r2 = Subspace::range(&s2, &cfg().tol);
        assert!(r1.is_orthogonal_to(&r2, &cfg().tol).unwrap());
        assert!(!r1.is_zero() && !r2.is_zero());
    }

    #[test]
    fn condition_i_is_validated() {
        let bad = BilateralSpec::from_fn(1, 2, |_, m| if m == 0 { 0.0 } else if m == -1 { 2.0 } else { 1.0 }).unwrap();
        match check_bilateral_weight_condition(&bad, None, 2) {
            Err(WoldError::ConditionIViolated { i: 1, m: -1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let bad = BilateralSpec::from_fn(2, 2, |_, m| if m == 2 { 0.5 } else if m == 0 { 0.0 } else { 1.0 }).unwrap();
        assert!(matches!(
            check_bilateral_weight_condition(&bad, None, 1),
            Err(WoldError::ConditionIViolated { i: 1, m: 2, .. })
        ));
    }

    #[test]
    fn unit_weights_hold_for_any_multiplier() {
        let spec = BilateralSpec::unit(2, 3).unwrap();
        let report = check_bilateral_weight_condition(&spec, Some(&[0.0, 0.0, 0.0]), 3).unwrap();
        for l in &report.levels {
            assert_eq!(l.literal_minimal_d, Some(0.0));
            assert_eq!(l.exact_minimal_d, Some(0.0));
            assert_eq!(l.violations, 0);
        }
        assert!(report.coverage() < 1.0);
    }

    /// Independent oracle: the path weight of a basis tuple read off the
    /// explicit matrix power.
    #[test]
    fn exact_product_matches_matrix_iterate() {
        let spec = BilateralSpec::from_fn(2, 4, |i, m| if m <= 0 { if m == 0 { 0.0 } else { 1.0 } } else { 1.0 + 0.1 * (i as f64) + 0.05 * m as f64 }).unwrap();
        let build = build_bilateral_shift(&spec, &cfg()).unwrap();
        let its = crate::model::iterates_v(&build.rep, 2, &cfg()).unwrap();
        let m_dim = spec.dim_h();
        for i1 in 1..=2usize {
            for i2 in 1..=2usize {
                for m in [-4i64, -1, 1] {
                    let path = path_indices(2, &[i1, i2], m);
                    if !path.iter().all(|&x| spec.in_window(x)) {
                        continue;
                    }
                    let w = spec.weight(i2, m) * spec.weight(i1, path[1]);
                    let col = ((i1 - 1) * 2 + (i2 - 1)) * m_dim + spec.coordinate(m);
                    let got = its[2][(spec.coordinate(path[2]), col)];
                    assert!((got - w).norm() < 1e-14, "{i1}{i2} m={m}");
                }
            }
        }
    }

    #[test]
    fn sqrt_two_weights_by_enumeration() {
        let s = 2f64.sqrt();
        let spec = BilateralSpec::from_fn(1, 6, |_, m| if m < 0 { 1.0 } else if m == 0 { 0.0 } else { s }).unwrap();
        let report = check_bilateral_weight_condition(&spec, None, 3).unwrap();
        // n = 1, m > 0: every weight on the path is √2, so the exact product is
        // 2^k and the literal one 2^{k+1}; slope 2 − 1 = 1.
        for l in &report.levels {
            let k = l.k as i32;
            assert!((l.exact_minimal_d.unwrap() - (2f64.powi(k) - 1.0)).abs() < 1e-12);
            assert!((l.literal_minimal_d.unwrap() - (2f64.powi(k + 1) - 1.0)).abs() < 1e-12);
        }
    }
}
