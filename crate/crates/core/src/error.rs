use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("fractional order {0} must lie strictly in (0,1)")]
    InvalidOrder(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("accuracy not attained: {0}")]
    AccuracyNotAttained(String),

    #[error("time {t} outside [0, {final_time}]")]
    TimeOutOfRange { t: f64, final_time: f64 },

    #[error("test function margin {margin} does not exceed the time step {step}")]
    MarginViolation { margin: f64, step: f64 },

    #[error("initial datum does not vanish on the boundary: |u0| = {value:e} at {location:?}")]
    BoundaryDatum { value: f64, location: [f64; 2] },

    #[error("non-finite value in {0}")]
    NonFinite(String),
}
