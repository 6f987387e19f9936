use serde::{Deserialize, Serialize};

use crate::error::{Result, WoldError};
use crate::linalg::{checked_pow, TolerancePolicy};

/// Default cap on the number of columns of any `E^{⊗n}⊗H` sized operand.
pub const DEFAULT_BUDGET: usize = 20_000;

/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "WOLDKIT_BUDGET";

/// Tolerances plus the size and horizon limits shared by every analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub tol: TolerancePolicy,
    /// Largest admissible `d^n·m`.
    pub budget: usize,
    /// Extra levels checked past the stabilization index.
    pub horizon_margin: usize,
    /// Lower bound for "for all n" horizons.
    pub min_horizon: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self { tol: TolerancePolicy::default(), budget: DEFAULT_BUDGET, horizon_margin: 4, min_horizon: 8 }
    }
}

impl Config {
    /// Defaults, with the budget taken from `WOLDKIT_BUDGET` when it parses.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(b) = std::env::var(BUDGET_ENV).ok().and_then(|s| s.trim().parse().ok()) {
            cfg.budget = b;
        }
        cfg
    }

    pub fn with_tol(mut self, tol: TolerancePolicy) -> Self {
        self.tol = tol;
        self
    }

    pub fn check_columns(&self, needed: usize) -> Result<()> {
        if needed > self.budget {
            return Err(WoldError::BudgetExceeded { needed, budget: self.budget });
        }
        Ok(())
    }

    /// `d^n·width`, checked against the budget.
    pub fn lifted_size(&self, d: usize, n: usize, width: usize) -> Result<usize> {
        let needed = checked_pow(d, n).and_then(|p| p.checked_mul(width)).unwrap_or(usize::MAX);
        self.check_columns(needed)?;
        Ok(needed)
    }

    /// Largest `n` with `d^n·m` inside the budget (capped at 64).
    pub fn max_level(&self, d: usize, m: usize) -> usize {
        let mut n = 0;
        while n < 64 && self.lifted_size(d, n + 1, m).is_ok() {
            n += 1;
        }
        n
    }

    /// Horizon for "for all n" checks given a stabilization index, clamped to the budget.
    pub fn horizon(&self, stabilization: usize, d: usize, m: usize) -> usize {
        (stabilization + self.horizon_margin).max(self.min_horizon).min(self.max_level(d, m)).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_level_respects_budget() {
        let cfg = Config::default();
        // 3^8 * 4 = 26244 > 20000, 3^7 * 4 = 8748.
        assert_eq!(cfg.max_level(3, 4), 7);
        assert_eq!(cfg.max_level(1, 5), 64);
    }

    #[test]
    fn horizon_is_clamped() {
        let cfg = Config::default();
        assert_eq!(cfg.horizon(2, 1, 3), 8);
        assert_eq!(cfg.horizon(6, 1, 3), 10);
        assert_eq!(cfg.horizon(2, 3, 4), 7);
    }

    #[test]
    fn budget_error_reports_sizes() {
        let cfg = Config { budget: 10, ..Config::default() };
        assert_eq!(
            cfg.lifted_size(2, 3, 2),
            Err(WoldError::BudgetExceeded { needed: 16, budget: 10 })
        );
    }
}
