use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
    #[error("degenerate coefficients: {0}")]
    Degenerate(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field mean {mean:e} is not zero (tolerance {tolerance:e})")]
    NonZeroMean { mean: f64, tolerance: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("Hessian requested at the singular point p = 0")]
    SingularPoint,
    #[error("step rejected: {0}")]
    StepRejected(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
