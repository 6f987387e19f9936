//! Seeded instance generators.
//!
//! Every generator draws from an explicit [`ChaCha8Rng`], so a seed fixes the
//! instance bit for bit on every platform.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, WoldError};
use crate::linalg::{c64, identity, op_norm, zeros, Matrix, Subspace, C64};
use crate::model::{representation_to_json, Config, Representation, Truncation};
use crate::shifts::{shift_spec_to_json, BilateralSpec, ShiftSpec, UnilateralSpec};
use crate::structure::is_regular;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for instance `index` of family `family`.
pub fn instance_rng(seed: u64, family: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ family.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

/// `key=value,key=value` pairs as given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| WoldError::InvalidParams(format!("expected key=value, found {item:?}")))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(WoldError::InvalidParams(format!("parameter {k:?} given twice")));
            }
        }
        Ok(Self(map))
    }

    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(WoldError::InvalidParams(format!(
                "unknown parameter {k:?}; expected one of {}",
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        self.0.get(key).map_or(Ok(default), |v| {
            v.parse().map_err(|_| WoldError::InvalidParams(format!("{key}={v} is not a non-negative integer")))
        })
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        self.0.get(key).map_or(Ok(default), |v| match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(WoldError::InvalidParams(format!("{key}={v} is not a finite number"))),
        })
    }

    pub fn str<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.0.get(key).map_or(default, String::as_str)
    }
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let mut a = zeros(rows, cols);
    // Column-major fill keeps the draw order independent of nalgebra internals.
    for j in 0..cols {
        for i in 0..rows {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            a[(i, j)] = c64(re, im);
        }
    }
    a
}

/// Haar-distributed unitary: QR of a Gaussian matrix with the phases of `R`'s
/// diagonal moved into `Q`.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `U diag(values) W*` with Haar `U`, `W`; trailing singular values are zero.
pub fn with_singular_values(rng: &mut ChaCha8Rng, rows: usize, cols: usize, values: &[f64]) -> Matrix {
    let u = random_unitary(rng, rows);
    let w = random_unitary(rng, cols);
    let mut s = zeros(rows, cols);
    for (i, &v) in values.iter().enumerate().take(rows.min(cols)) {
        s[(i, i)] = c64(v, 0.0);
    }
    u * s * w.adjoint()
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Random matrix of the given rank, nonzero singular values drawn from `[lo, hi)`.
pub fn random_of_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize, lo: f64, hi: f64) -> Matrix {
    let values: Vec<f64> = (0..rank.min(rows).min(cols)).map(|_| uniform(rng, lo, hi)).collect();
    with_singular_values(rng, rows, cols, &values)
}

/// Generic representation with a random rank in `0..=m`, biased towards full rank.
pub fn random_rep(rng: &mut ChaCha8Rng, d: usize, m: usize) -> Result<Representation> {
    let rank = if rng.gen_bool(0.5) { m } else { rng.gen_range(0..=m) };
    let v = random_of_rank(rng, m, d * m, rank, 0.3, 3.0);
    Representation::new(d, m, v)
}

/// Left-invertible forces `d = 1`: `Ṽ` has `d·m` columns but rank at most `m`.
pub fn left_invertible(rng: &mut ChaCha8Rng, m: usize, gamma_min: f64) -> Result<Representation> {
    if m == 0 || gamma_min <= 0.0 {
        return Err(WoldError::InvalidParams("need m ≥ 1 and gamma > 0".into()));
    }
    let values: Vec<f64> = (0..m).map(|_| uniform(rng, gamma_min, gamma_min + 2.0)).collect();
    Representation::new(1, m, with_singular_values(rng, m, m, &values))
}

/// `Ṽ*Ṽ ≥ I`. Only `d = 1` is possible, since `Ṽ*Ṽ` has rank at most `m < d·m`.
pub fn expansive(rng: &mut ChaCha8Rng, d: usize, m: usize) -> Result<Representation> {
    if d != 1 {
        return Err(WoldError::InvalidParams(format!(
            "an expansive representation needs V*V ≥ I on all {} columns but V has rank ≤ {m}; only d = 1 is possible",
            d * m
        )));
    }
    left_invertible(rng, m, 1.0)
}

/// Surjective `Ṽ` rescaled so that `γ(Ṽ)` equals `target`. Works for any `d`.
pub fn gamma_expansive(rng: &mut ChaCha8Rng, d: usize, m: usize, target: f64) -> Result<Representation> {
    if d == 0 || m == 0 || target <= 0.0 {
        return Err(WoldError::InvalidParams("need d, m ≥ 1 and a positive target".into()));
    }
    let mut values: Vec<f64> = (0..m).map(|_| uniform(rng, 1.0, 3.0)).collect();
    let smallest = values.iter().copied().fold(f64::INFINITY, f64::min);
    for v in &mut values {
        *v *= target / smallest;
    }
    Representation::new(d, m, with_singular_values(rng, m, d * m, &values))
}

/// Concave at `d = 1` forces `Ṽ` unitary. Start from a unitary, perturb it, and
/// project back onto the unitaries through the polar factor.
pub fn concave(rng: &mut ChaCha8Rng, m: usize, perturbation: f64) -> Result<Representation> {
    if m == 0 {
        return Err(WoldError::InvalidParams("m must be positive".into()));
    }
    let u = random_unitary(rng, m);
    let noisy = &u + gaussian_matrix(rng, m, m) * c64(perturbation, 0.0);
    let (u, _, v_t) = crate::linalg::thin_svd(&noisy);
    let polar = u * v_t;
    Representation::new(1, m, polar)
}

/// Truncated `d = 1` weighted shift on `ℂ^{k+1}`: `e_j ↦ w_j e_{j+1}`, last column zero.
pub fn truncated_shift(weights: &[f64]) -> Result<Representation> {
    let n = weights.len() + 1;
    let v = Matrix::from_fn(n, n, |i, j| if i == j + 1 { c64(weights[j], 0.0) } else { c64(0.0, 0.0) });
    Representation::new(1, n, v)?.with_truncation(Truncation { boundary_columns: vec![n - 1], safe_depth: n - 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Shift,
    /// Truncated shift with weights strictly above one.
    ExpansiveShift,
    Unitary,
}

/// A block-diagonal `d = 1` representation with known decomposition.
#[derive(Debug, Clone)]
pub struct BlockInstance {
    pub rep: Representation,
    pub sizes: Vec<usize>,
    pub kinds: Vec<BlockKind>,
}

impl BlockInstance {
    fn blocks_of(&self, pick: impl Fn(BlockKind) -> bool) -> Subspace {
        let m = self.rep.dim_h();
        let mut idx = Vec::new();
        let mut off = 0;
        for (&size, &kind) in self.sizes.iter().zip(&self.kinds) {
            if pick(kind) {
                idx.extend(off..off + size);
            }
            off += size;
        }
        Subspace::coordinates(m, &idx)
    }

    /// Where `[W]` should land: the shift blocks.
    pub fn shift_part(&self) -> Subspace {
        self.blocks_of(|k| k != BlockKind::Unitary)
    }

    /// Where `R^∞` should land: the unitary blocks.
    pub fn unitary_part(&self) -> Subspace {
        self.blocks_of(|k| k == BlockKind::Unitary)
    }
}

/// Two to four blocks, at least one shift, total dimension at most 12.
pub fn block_instance(rng: &mut ChaCha8Rng) -> Result<BlockInstance> {
    let count = rng.gen_range(2..=4);
    let mut parts = Vec::with_capacity(count);
    let mut sizes = Vec::with_capacity(count);
    let mut kinds = Vec::with_capacity(count);
    for b in 0..count {
        let kind = match (b, rng.gen_range(0..3)) {
            (0, _) | (_, 0) => BlockKind::Shift,
            (_, 1) => BlockKind::ExpansiveShift,
            _ => BlockKind::Unitary,
        };
        let size = rng.gen_range(1..=3);
        let rep = match kind {
            BlockKind::Shift => truncated_shift(&vec![1.0; size])?,
            BlockKind::ExpansiveShift => {
                let w: Vec<f64> = (0..size).map(|_| uniform(rng, 1.1, 2.0)).collect();
                truncated_shift(&w)?
            }
            BlockKind::Unitary => Representation::new(1, size, random_unitary(rng, size))?,
        };
        sizes.push(rep.dim_h());
        kinds.push(kind);
        parts.push(rep);
    }
    Ok(BlockInstance { rep: Representation::direct_sum(&parts)?, sizes, kinds })
}

/// A representation known to be regular, drawn from a mix of families.
pub fn regular_instance(rng: &mut ChaCha8Rng, cfg: &Config) -> Result<Representation> {
    for _ in 0..32 {
        let d = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=4);
        let rep = match rng.gen_range(0..3) {
            0 => {
                let target = uniform(rng, 0.5, 2.0);
                gamma_expansive(rng, d, m, target)?
            }
            1 => left_invertible(rng, m, 0.5)?,
            _ => random_rep(rng, d, m)?,
        };
        if is_regular(&rep, cfg)?.is_regular() {
            return Ok(rep);
        }
    }
    // Surjective representations are always regular.
    gamma_expansive(rng, 1, 2, 1.0)
}

/// A contraction `A` commuting with a truncated weighted shift `T`, together
/// with `T` as a representation.
#[derive(Debug, Clone)]
pub struct PurityPair {
    pub rep: Representation,
    pub a: Matrix,
}

/// `A` is a polynomial in `T` scaled to norm at most one. One pair in five is a
/// unimodular multiple of the identity, which is never pure.
pub fn purity_pair(rng: &mut ChaCha8Rng) -> Result<PurityPair> {
    let m = rng.gen_range(2..=6);
    let weights: Vec<f64> = (0..m - 1).map(|_| uniform(rng, 1.0, 2.0)).collect();
    let rep = truncated_shift(&weights)?;
    let t = rep.v().clone();
    if rng.gen_bool(0.2) {
        let theta = uniform(rng, 0.0, std::f64::consts::TAU);
        return Ok(PurityPair { rep, a: identity(m) * C64::from_polar(1.0, theta) });
    }
    let degree = rng.gen_range(0..=3);
    let mut a = zeros(m, m);
    let mut power = identity(m);
    for _ in 0..=degree {
        let coeff = c64(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0));
        a += &power * coeff;
        power = &power * &t;
    }
    let norm = op_norm(&a);
    if norm > 1.0 {
        a *= c64(1.0 / norm, 0.0);
    }
    Ok(PurityPair { rep, a })
}

/// `Z_k = c_k·U_k` with `c_k` drawn from `[lo, hi)` and `U_k` Haar unitary.
pub fn unilateral_spec(
    rng: &mut ChaCha8Rng,
    d: usize,
    levels: usize,
    p: usize,
    lo: f64,
    hi: f64,
) -> Result<UnilateralSpec> {
    let mut z = Vec::with_capacity(levels);
    for k in 1..=levels {
        let size = crate::linalg::checked_pow(d, k).ok_or_else(|| WoldError::InvalidParams("d^k overflows".into()))?;
        let c = uniform(rng, lo, hi);
        z.push(random_unitary(rng, size) * c64(c, 0.0));
    }
    UnilateralSpec::new(d, levels, p, z)
}

/// Weights obeying the sign pattern: one for `m < 0`, zero at `m = 0`, and for
/// `m > 0` either one (`random = false`) or a random phase with modulus in `[1, 2)`.
pub fn bilateral_spec(rng: &mut ChaCha8Rng, n: usize, radius: usize, random: bool) -> Result<BilateralSpec> {
    if !random {
        return BilateralSpec::unit(n, radius);
    }
    let r = radius as i64;
    let mut w = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::with_capacity(2 * radius + 1);
        for m in -r..=r {
            row.push(match m.signum() {
                -1 => c64(1.0, 0.0),
                0 => c64(0.0, 0.0),
                _ => C64::from_polar(uniform(rng, 1.0, 2.0), uniform(rng, 0.0, std::f64::consts::TAU)),
            });
        }
        w.push(row);
    }
    BilateralSpec::new(n, radius, w)
}

/// Output of [`generate`]: either a representation file or a shift spec.
#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Representation(Representation),
    Shift(ShiftSpec),
}

impl Generated {
    pub fn to_json(&self) -> String {
        match self {
            Self::Representation(rep) => representation_to_json(rep),
            Self::Shift(spec) => shift_spec_to_json(spec),
        }
    }
}

pub const GENERATOR_KINDS: &[&str] =
    &["random", "left-invertible", "expansive", "gamma-expansive", "concave", "block", "unilateral", "bilateral"];

/// Dispatches a generator by name. Parameters and their defaults:
///
/// | kind | parameters |
/// |---|---|
/// | `random` | `d=2, m=3` |
/// | `left-invertible` | `m=3, gamma=1.5` |
/// | `expansive` | `d=1, m=3` |
/// | `gamma-expansive` | `d=2, m=2, gamma=1.25` |
/// | `concave` | `m=3, eps=0.1` |
/// | `block` | none |
/// | `unilateral` | `d=1, L=3, p=1, lo=1.1, hi=2` |
/// | `bilateral` | `n=1, M=3, weights=unit` (or `random`) |
pub fn generate(kind: &str, params: &Params, seed: u64) -> Result<Generated> {
    let rng = &mut rng_from_seed(seed);
    let rep = |r: Representation| Ok(Generated::Representation(r));
    match kind {
        "random" => {
            params.only(&["d", "m"])?;
            rep(random_rep(rng, positive(params, "d", 2)?, positive(params, "m", 3)?)?)
        }
        "left-invertible" => {
            params.only(&["m", "gamma"])?;
            rep(left_invertible(rng, positive(params, "m", 3)?, params.f64("gamma", 1.5)?)?)
        }
        "expansive" => {
            params.only(&["d", "m"])?;
            rep(expansive(rng, positive(params, "d", 1)?, positive(params, "m", 3)?)?)
        }
        "gamma-expansive" => {
            params.only(&["d", "m", "gamma"])?;
            let (d, m) = (positive(params, "d", 2)?, positive(params, "m", 2)?);
            rep(gamma_expansive(rng, d, m, params.f64("gamma", 1.25)?)?)
        }
        "concave" => {
            params.only(&["m", "eps"])?;
            rep(concave(rng, positive(params, "m", 3)?, params.f64("eps", 0.1)?)?)
        }
        "block" => {
            params.only(&[])?;
            rep(block_instance(rng)?.rep)
        }
        "unilateral" => {
            params.only(&["d", "L", "p", "lo", "hi"])?;
            let (lo, hi) = (params.f64("lo", 1.1)?, params.f64("hi", 2.0)?);
            if lo < 1.0 || hi < lo {
                return Err(WoldError::InvalidParams("need 1 ≤ lo ≤ hi".into()));
            }
            let (d, levels, p) = (positive(params, "d", 1)?, positive(params, "L", 3)?, positive(params, "p", 1)?);
            Ok(Generated::Shift(ShiftSpec::Unilateral(unilateral_spec(rng, d, levels, p, lo, hi)?)))
        }
        "bilateral" => {
            params.only(&["n", "M", "weights"])?;
            let random = match params.str("weights", "unit") {
                "unit" => false,
                "random" => true,
                other => return Err(WoldError::InvalidParams(format!("weights={other}: expected unit or random"))),
            };
            let (n, radius) = (positive(params, "n", 1)?, params.usize("M", 3)?);
            Ok(Generated::Shift(ShiftSpec::Bilateral(bilateral_spec(rng, n, radius, random)?)))
        }
        other => Err(WoldError::InvalidParams(format!(
            "unknown generator {other:?}; expected one of {}",
            GENERATOR_KINDS.join(", ")
        ))),
    }
}

fn positive(params: &Params, key: &str, default: usize) -> Result<usize> {
    match params.usize(key, default)? {
        0 => Err(WoldError::InvalidParams(format!("{key} must be positive"))),
        v => Ok(v),
    }
}
