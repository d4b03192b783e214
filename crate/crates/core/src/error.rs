use thiserror::Error;

/// Errors raised anywhere in the perception pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("unknown raw label `{0}`")]
    UnknownLabel(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("reference points coincide; fully invariant encoding has no baseline")]
    DegenerateReference,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("training target error: {0}")]
    Target(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
