use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CbeError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CbeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {what} (expected {expected}, got {actual})")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index {index} out of range for {len} rows")]
    OutOfRange { index: usize, len: usize },

    #[error("objective is unbounded below: {0}")]
    Unbounded(String),

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("truncated input: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("payload size mismatch: header implies {expected} bytes, found {found}")]
    SizeMismatch { expected: u64, found: u64 },

    #[error("nonzero padding bits in code row {row}")]
    CorruptPadding { row: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("rows with zero norm cannot be normalized: {0:?}")]
    ZeroRows(Vec<usize>),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<CbeError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CbeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CbeError::InvalidArgument(msg.into())
    }

    pub(crate) fn at_path(self, path: impl Into<PathBuf>) -> Self {
        CbeError::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// The underlying error with any path context stripped.
    pub fn root(&self) -> &CbeError {
        match self {
            CbeError::File { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self.root(), CbeError::Unbounded(_) | CbeError::Numerical(_))
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(CbeError::ShapeMismatch {
            what,
            expected,
            actual,
        })
    }
}
