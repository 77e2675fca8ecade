use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("non-uniform grid: {0}")]
    NonUniformGrid(String),

    #[error("malformed trajectory file: {0}")]
    Malformed(String),

    #[error("not informative for identification: {0}")]
    NotInformative(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("empty compatible set: {0}")]
    EmptySet(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
