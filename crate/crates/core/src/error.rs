//! Library error type.

use thiserror::Error;

/// Errors produced by the simulation and estimation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Geometry that makes an operation ill-defined (coincident positions,
    /// rank-deficient constellations, singular information matrices).
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Configuration file or experiment setup problem.
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
