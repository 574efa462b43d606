//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A file or header does not follow the expected layout.
    #[error("format error: {0}")]
    Format(String),

    /// A file exists and parses but its contents are inconsistent
    /// (e.g. declared dimensions do not match the payload size).
    #[error("corrupt data: {0}")]
    CorruptData(String),

    /// A window or index lies outside the raster extent.
    #[error("out of bounds: {0}")]
    Bounds(String),

    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Not enough pixels of a class to satisfy a sampling request.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A training set that a classifier variant cannot be fitted on
    /// (e.g. a single class for a margin-based variant).
    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    /// Non-finite or otherwise unusable numeric data.
    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::CorruptData(msg.into())
    }

    pub(crate) fn bounds(msg: impl Into<String>) -> Self {
        Error::Bounds(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
