use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("coordinate descent did not converge at lambda = {lambda:e}")]
    NotConverged { lambda: f64 },

    #[error("non-finite log density at initial state: {0}")]
    NonFiniteInit(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::UnknownColumn(_) => "unknown_column",
            Error::UnknownParameter(_) => "unknown_parameter",
            Error::NotConverged { .. } => "not_converged",
            Error::NonFiniteInit(_) => "non_finite_init",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
        }
    }
}
