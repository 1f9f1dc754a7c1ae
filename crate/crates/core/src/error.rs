use std::path::PathBuf;

use thiserror::Error;

use crate::grid::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("network failed validation:\n{0}")]
    Validation(ValidationReport),

    #[error("unknown bus `{0}`")]
    UnknownBus(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scenario data: {0}")]
    Scenario(String),

    #[error("model build: {0}")]
    Model(String),

    #[error("portfolio does not conform to network: {0}")]
    Portfolio(String),

    #[error("inconsistent merge map: {0}")]
    MergeMap(String),

    #[error("mapping: {0}")]
    Mapping(String),

    #[error("solver: {0}")]
    Solver(String),

    #[error("metrics: {0}")]
    Metrics(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
