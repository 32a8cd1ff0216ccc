//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (unknown task family, bad stage id, bounds
    /// violations). Maps to exit code 2 at the CLI boundary.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input data (corpus records, transcripts, checkpoints).
    #[error("invalid data: {0}")]
    Data(String),

    /// Checkpoint integrity or compatibility failure.
    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    /// A numeric update produced non-finite values; the step was aborted.
    #[error("non-finite update: {0}")]
    NonFinite(String),

    /// Generation provider transport failure after retries.
    #[error("provider unavailable: {0}")]
    Provider(String),

    /// Corpus construction stalled without reaching its targets.
    #[error("corpus build stalled: {0}")]
    Stalled(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
