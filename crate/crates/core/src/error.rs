use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("density cannot be normalized: {0}")]
    NotNormalizable(String),
    #[error("grids do not match")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("map is not strictly increasing near x = {0}")]
    NonMonotoneMap(f64),
    #[error("mass leaves the computational domain (x = {0})")]
    OutsideDomain(f64),
    #[error("histogram masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },
    #[error("Newton iteration failed in {what}: residual {residual:e}")]
    NewtonFailure { what: &'static str, residual: f64 },
    #[error("stationary residual {0:e} exceeds tolerance")]
    StationaryResidual(f64),
    #[error("step {step} failed: {source}")]
    StepFailed { step: usize, source: Box<Error> },
    #[error("not enough usable samples: {0} (need at least 10)")]
    TooFewSamples(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
