use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the decoding pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A hyperparameter or size is out of its valid range.
    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs are individually valid but inconsistent with each other
    /// (mismatched dimensions, out-of-bounds coordinates).
    #[error("domain error: {0}")]
    Domain(String),

    /// The heatmap carries no usable signal (all zero, non-finite).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Anchor geometry does not determine a unique position.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
