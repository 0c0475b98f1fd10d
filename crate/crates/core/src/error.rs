//! Error type shared by the toolkit.

use thiserror::Error;

/// Errors produced by grid construction, validation, solves and I/O.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("potential evaluation produced a non-finite value at node {index} ({coords:?})")]
    NonFinitePotential { index: usize, coords: Vec<f64> },

    #[error("phase branch cut hit at ({coords:?}): (r - q1 + z)/r = {w_re} + {w_im}i lies on (-inf, 0]")]
    BranchCut { coords: Vec<f64>, w_re: f64, w_im: f64 },

    #[error("weight violates its support condition: {0}")]
    UnsupportedWeight(String),

    #[error("field support violates a precondition: {0}")]
    UnsupportedField(String),

    #[error("solver failed to converge within {iterations} iterations (best relative residual {best_residual:.3e})")]
    SolverNotConverged { iterations: usize, best_residual: f64 },

    #[error("singular factorization at pivot {pivot}")]
    SingularFactorization { pivot: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
