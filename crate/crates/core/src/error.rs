use thiserror::Error;

/// Errors raised by the dependence-testing pipeline and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    /// A margin has no spread, so no partition can be centred on it.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: x has {x} values, y has {y}")]
    LengthMismatch { x: usize, y: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("variable names differ between conditions: {0}")]
    VarMismatch(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("ragged rows: line {line} has {found} fields, header has {expected}")]
    RaggedRows {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("matrix has a header but no data rows")]
    EmptyMatrix,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::DegenerateSample(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
