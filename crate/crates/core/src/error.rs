use thiserror::Error;

/// Errors raised by grids, propagators and the optimizer.
#[derive(Debug, Error)]
pub enum OctError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("control parameter {lambda} outside [0, 1]")]
    Domain { lambda: f64 },

    #[error("field singularity: {0}")]
    Singularity(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no convergence after {steps} steps (last residual {residual:e})")]
    Convergence { steps: usize, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("field format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = OctError> = std::result::Result<T, E>;
