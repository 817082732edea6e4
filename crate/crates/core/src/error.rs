use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    Divergence { iterations: usize, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("radial grid reaches r = {available} but r = {needed} is required")]
    DomainCoverage { needed: f64, available: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("solution blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("undefined fit: {0}")]
    UndefinedFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
