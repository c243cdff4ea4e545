use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
///
/// Variants fall into three families that the CLI maps onto exit codes:
/// usage problems (bad parameters), data problems (files that do not parse
/// or violate a format invariant) and numeric problems (a statistic that is
/// undefined for the given input).
#[derive(Debug, Error)]
pub enum HubError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic at byte offset 0: expected \"HUBM\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported {field} {value} at byte offset {offset}")]
    BadHeader {
        field: &'static str,
        value: u64,
        offset: usize,
    },

    #[error("truncated matrix: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("trailing bytes after matrix payload: expected {expected} bytes, found {actual}")]
    Trailing { expected: u64, actual: u64 },

    #[error("non-finite element at byte offset {offset}")]
    NonFinite { offset: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),
}

impl HubError {
    /// Process exit status for this error: 2 usage, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            HubError::Param(_) => 2,
            HubError::Undefined(_) => 4,
            _ => 3,
        }
    }

    /// Short machine-parsable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            HubError::Io { .. } => "io",
            HubError::BadMagic { .. } | HubError::BadHeader { .. } => "format",
            HubError::Truncated { .. } => "truncated",
            HubError::Trailing { .. } => "trailing",
            HubError::NonFinite { .. } => "non-finite",
            HubError::Parse { .. } => "parse",
            HubError::Data(_) => "data",
            HubError::Shape(_) => "shape",
            HubError::Param(_) => "usage",
            HubError::Undefined(_) => "numeric",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HubError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HubError>;
