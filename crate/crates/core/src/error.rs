use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate Gaussian kernel: all edge distances are zero")]
    DegenerateKernel,

    #[error("singular operator: {0}")]
    SingularOperator(String),

    #[error("condition number is infinite (operator is singular)")]
    InfiniteConditionNumber,

    #[error("eigenvalue estimation failed after {iterations} iterations (best estimate {best})")]
    EstimationFailed { best: f64, iterations: usize },

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("numerical overflow: {0}")]
    NumericalOverflow(String),

    #[error("empty entry set: {0}")]
    EmptySelection(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: row {row}, column {column} ({header}): cannot parse {value:?} as a number")]
    Cell {
        path: String,
        row: u64,
        column: usize,
        header: String,
        value: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("output directory {0} is not writable: {1}")]
    Output(PathBuf, std::io::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
