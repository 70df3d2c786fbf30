use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the localization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("source lies inside detector {0}")]
    SourceInsideDetector(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("non-finite feature at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("line {line}: non-numeric value {value:?} in column {column}")]
    NonNumeric {
        line: usize,
        column: String,
        value: String,
    },

    #[error("line {line}: expected {expected} fields, found {found}")]
    InconsistentWidth {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("container kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("unsupported container format version {0}")]
    Version(u32),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse error classes, mirrored by the CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Schema,
    Numeric,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 1,
            ErrorCategory::Schema => 2,
            ErrorCategory::Numeric => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Usage => "usage",
            ErrorCategory::Schema => "schema",
            ErrorCategory::Numeric => "numeric",
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidInput(_) => ErrorCategory::Usage,
            Error::SourceInsideDetector(_) | Error::Degenerate(_) | Error::Numeric(_) => {
                ErrorCategory::Numeric
            }
            Error::DimensionMismatch { .. }
            | Error::EmptyClass(_)
            | Error::NonFinite { .. }
            | Error::Schema(_)
            | Error::NonNumeric { .. }
            | Error::InconsistentWidth { .. }
            | Error::KindMismatch { .. }
            | Error::Version(_)
            | Error::Corrupt(_)
            | Error::Io(_) => ErrorCategory::Schema,
        }
    }
}
