use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size must be even and at least 4, got {0}")]
    InvalidGrid(usize),

    #[error("field length {found} does not match grid size {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("mollifier index must be at least 2, got {0}")]
    InvalidMollifier(usize),

    #[error("bound hypothesis violated: beta = inf|rho0| must be positive, got {0}")]
    NonPositiveBeta(f64),

    #[error("rho0 drops to {min} below the declared lower bound alpha = {alpha}")]
    AlphaViolated { alpha: f64, min: f64 },

    #[error("invalid time-stepping configuration: {0}")]
    InvalidTimeStep(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("trajectory terminated in blow-up at t = {0}")]
    BlowUp(f64),

    #[error("invalid study setup: {0}")]
    InvalidStudy(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
