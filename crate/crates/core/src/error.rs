use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{axis} length {len} is not a multiple of the subregion side {side}")]
    NotDivisible {
        axis: &'static str,
        len: usize,
        side: usize,
    },

    #[error("subregion side {side} is below the minimum of {min}")]
    SideTooSmall { side: usize, min: usize },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("raster payload truncated: header promises {expected} values, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("all periodogram ordinates are zero; log-spectra are undefined")]
    DegenerateSpectrum,

    #[error("design matrix is rank deficient: {deficient} of {columns} columns are dependent")]
    RankDeficient { deficient: usize, columns: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown {what}: {name}")]
    UnknownKind { what: &'static str, name: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that come from the numbers rather than from the
    /// caller's inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Numeric(_) | Error::RankDeficient { .. } | Error::DegenerateSpectrum
        )
    }
}
