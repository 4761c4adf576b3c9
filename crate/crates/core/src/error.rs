use thiserror::Error;

/// Errors raised by oracles, step rules, the run loop and the bound evaluators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("power iteration did not converge after {iterations} iterations (best relative residual {best_residual:e})")]
    Convergence { iterations: usize, best_residual: f64 },

    #[error("step size {0} is outside [0, 1)")]
    Domain(f64),

    #[error("index {index} out of range for trace of length {len}")]
    Range { index: usize, len: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("curvature estimate exceeded {limit:e} at iteration {k}; the oracle is inconsistent")]
    CurvatureOverflow { k: usize, limit: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("trace format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
