use std::io;

use thiserror::Error;

/// Errors produced anywhere in the forecasting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A network specification or configuration violates its own invariants.
    #[error("invalid specification: {0}")]
    Spec(String),
    /// A caller broke an operation's precondition (shapes, ranges, ordering).
    #[error("contract violation: {0}")]
    Contract(String),
    /// Input values are unusable (non-finite, degenerate).
    #[error("data error: {0}")]
    Data(String),
    /// A flow CSV or manifest could not be ingested.
    #[error("ingest error at row {row}: {message}")]
    Ingest { row: usize, message: String },
    /// A config file is missing keys or holds malformed values.
    #[error("config error: {0}")]
    Config(String),
    /// A model file failed magic, version, length, or checksum validation.
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let row = err
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Ingest {
                row,
                message: format!("{other:?}"),
            },
        }
    }
}

impl From<toml::de::Error> for Error {
    fn from(err: toml::de::Error) -> Self {
        Error::Config(err.message().to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
