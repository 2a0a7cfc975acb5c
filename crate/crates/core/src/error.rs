use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("squared Hessian diagonal entry {index} is not positive ({value:e})")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("degenerate curvature: u'Hu = {0:e}")]
    DegenerateCurvature(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("bad feature index on line {line}: {msg}")]
    Index { line: usize, msg: String },

    #[error("column {column} out of range for {dim} features")]
    ColumnOutOfRange { column: usize, dim: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
