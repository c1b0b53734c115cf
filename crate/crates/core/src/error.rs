use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: row {row}, column `{column}`: label value `{value}` is not 0 or 1")]
    BadLabel {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("quadrature did not converge (achieved error estimate {achieved:e}, tolerance {tolerance:e})")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("support pair #{index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("class {0} absent from validation archive")]
    ClassAbsent(usize),

    #[error("missing results for {0}")]
    MissingCells(String),

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
