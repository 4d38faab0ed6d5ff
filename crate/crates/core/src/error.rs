use thiserror::Error;

/// Errors raised by the simulator and its diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("truncation mismatch: field has level {field}, model expects {model}")]
    TruncationMismatch { field: usize, model: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite or exploding state at t = {t}")]
    NonFinite { t: f64 },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("inconsistent ensemble: {0}")]
    InconsistentEnsemble(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
