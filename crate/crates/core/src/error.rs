use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix not positive definite (min eig = {min_eig:e}, max eig = {max_eig:e})")]
    NotPositiveDefinite { min_eig: f64, max_eig: f64 },

    #[error("function not finite at eigenvalue {eigenvalue:e} (value {value})")]
    Domain { eigenvalue: f64, value: f64 },

    #[error("matrix is numerically singular (condition estimate {cond:e})")]
    Singular { cond: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("iterate left the admissible interval: {0}")]
    Divergence(String),

    #[error("unknown identifier: {0}")]
    Unknown(String),
}

pub type Result<T> = std::result::Result<T, Error>;
