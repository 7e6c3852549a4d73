use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("basis columns are not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("quantity undefined: {0}")]
    Undefined(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
