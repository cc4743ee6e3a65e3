use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("divergent quantity: {0}")]
    Divergent(String),

    #[error("expected {expected} events exceeds the configured cap of {cap}")]
    Capacity { expected: f64, cap: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient observations: {got} points, need at least {need}")]
    InsufficientObservations { got: usize, need: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("regime indeterminate: b = {b} lies within {guard} of 1")]
    Indeterminate { b: f64, guard: f64 },

    #[error("no snapshot recorded at t = {0}")]
    MissingSnapshot(f64),

    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
