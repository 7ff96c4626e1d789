use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("approximation order {order} outside 1..={max}")]
    OrderOutOfRange { order: usize, max: usize },

    #[error("invalid sample grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate sample grid: {0}")]
    DegenerateGrid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("lags ({k1}, {k2}) out of range for record length {len}")]
    Lag { k1: isize, k2: isize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("SNR undefined: signal has zero power")]
    UndefinedSnr,

    #[error("insufficient frames: {got} (need at least {min})")]
    InsufficientFrames { got: usize, min: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wrap this error with a description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 1 configuration, 2 degenerate data, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Io { .. } => 3,
            Error::DegenerateGrid(_)
            | Error::UndefinedSnr
            | Error::InsufficientFrames { .. }
            | Error::Degenerate(_) => 2,
            _ => 1,
        }
    }
}
