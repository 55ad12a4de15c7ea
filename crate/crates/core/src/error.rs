use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or experiment parameter violates its constraint.
    #[error("invalid value for `{key}`: requires {constraint}")]
    InvalidParam { key: &'static str, constraint: &'static str },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    /// An operation was called outside its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Input carries no information for the requested statistic
    /// (zero variance, empty range, non-finite values).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("sample size {given} outside supported range [{min}, {max}]")]
    SampleSize { given: usize, min: usize, max: usize },

    #[error("csv schema has {expected} columns but row has {found}")]
    Schema { expected: usize, found: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }

    /// Process exit status for this error: 1 config, 2 runtime/analysis, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParam { .. } | Error::Config { .. } => 1,
            Error::Io { .. } | Error::Csv { .. } => 3,
            _ => 2,
        }
    }
}
