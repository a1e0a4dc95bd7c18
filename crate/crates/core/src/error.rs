use thiserror::Error;

/// Errors raised by the estimation pipeline and the experiment harness.
#[derive(Debug, Error)]
pub enum QcompError {
    #[error("invalid radar configuration: {0}")]
    InvalidConfig(String),

    #[error("signal has no dynamic range (all samples are zero)")]
    ZeroSignal,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("no candidate grid bin left to select")]
    NoCandidateBin,

    #[error("expected {expected} estimates, got {actual}")]
    CountMismatch { expected: usize, actual: usize },

    #[error("invalid experiment configuration: {0}")]
    InvalidExperiment(String),

    #[error("cell {cell} failed at trial {trial}: {source}")]
    TrialFailed {
        cell: String,
        trial: usize,
        #[source]
        source: Box<QcompError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QcompError>;
