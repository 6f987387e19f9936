use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WoldError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("size budget exceeded: {needed} columns requested, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("generalized-inverse identity violated (residual {residual:e})")]
    IdentityViolated { residual: f64 },
    #[error("representation is not regular")]
    NotRegular,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("subspace is not invariant (residual {residual:e})")]
    NotInvariant { residual: f64 },
    #[error("representation is not left-invertible")]
    NotLeftInvertible,
    #[error("operator is not a contraction (norm {norm})")]
    NotContraction { norm: f64 },
    #[error("weight operator Z_{index} is not invertible")]
    NotInvertible { index: usize },
    #[error("weight condition (i) violated at i={i}, m={m}: {reason}")]
    ConditionIViolated { i: usize, m: i64, reason: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = WoldError> = std::result::Result<T, E>;
