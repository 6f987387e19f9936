use serde::{Deserialize, Serialize};

/// Tolerances used by every rank, orthogonality, positivity and subspace decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Relative singular-value cutoff.
    pub rank: f64,
    /// Orthonormality defect allowed in computed bases.
    pub orth: f64,
    /// Negative eigenvalue slack for semidefiniteness, relative to scale.
    pub psd: f64,
    /// Residual allowed in subspace containment tests.
    pub sub: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self { rank: 1e-10, orth: 1e-10, psd: 1e-9, sub: 1e-8 }
    }
}

impl TolerancePolicy {
    /// Singular values at or below this value are treated as zero.
    pub fn rank_cutoff(&self, sigma_max: f64, rows: usize, cols: usize) -> f64 {
        self.rank * sigma_max * rows.max(cols).max(1) as f64
    }

    /// Slack for `λ_min ≥ -slack` with the given operator scale.
    pub fn psd_slack(&self, scale: f64) -> f64 {
        self.psd * scale.max(1.0)
    }
}
