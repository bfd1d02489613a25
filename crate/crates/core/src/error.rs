use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution failed validation (negative entry, bad normalization).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    /// Array or alphabet dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested constraint cannot be met by any admissible solution.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Solver or grid configuration violates a stability/consistency bound.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
