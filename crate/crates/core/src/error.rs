use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operation not supported for the {0} family")]
    UnsupportedFamily(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A matrix that has to be inverted is singular at the given state.
    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("projection is not orthogonal with respect to the basis Gram matrix (residual {0:.3e})")]
    NonOrthogonalProjection(f64),

    #[error("unknown model '{name}'; available presets: {available}")]
    UnknownModel { name: String, available: String },

    #[error("inconsistent model parameters: {0}")]
    InconsistentModel(String),

    #[error("cell {cell} is not hyperbolic at t = {time} (step {step})")]
    NonHyperbolicCell { cell: usize, step: usize, time: f64 },

    #[error("cell {cell} lost positivity at t = {time} (step {step}): rho = {rho}, theta = {theta}")]
    Positivity { cell: usize, step: usize, time: f64, rho: f64, theta: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
