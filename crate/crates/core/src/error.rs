use thiserror::Error;

use crate::collectives::CommError;
use crate::csr::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid CSR matrix: {0}")]
    InvalidCsr(ValidationReport),

    #[error("duplicate entry at row {row}, column {col}")]
    DuplicateEntry { row: usize, col: usize },

    #[error("rank count must be at least 1")]
    InvalidSize,

    #[error("rank {rank} out of range for {size} ranks")]
    InvalidRank { rank: usize, size: usize },

    /// Local sizes do not add up to the global extent.
    #[error("sum {sum} != {global}")]
    LayoutSumMismatch { sum: usize, global: usize },

    #[error("explicit layout has {found} entries for {size} ranks")]
    LayoutLength { found: usize, size: usize },

    #[error(transparent)]
    Comm(#[from] CommError),

    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("line {line}: {field}: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("validation failed: {0}")]
    ValidationFailed(String),

    #[error("unsupported Matrix Market file: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}
