use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset contains no samples")]
    NoSamples,

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("degenerate b-bit correction: 1 - C2 = {0:e}")]
    DegenerateCorrection(f64),

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),

    /// Any of the above, tagged with the file it came from.
    #[error("{path}: {source}")]
    InFile { path: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::Mismatch(msg.into())
    }

    pub fn in_file(self, path: impl Into<String>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// Short machine-parsable tag used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "E_PARSE",
            Error::NoSamples => "E_NO_SAMPLES",
            Error::EmptySet(_) => "E_EMPTY_SET",
            Error::InvalidParameter(_) => "E_PARAM",
            Error::Format(_) => "E_FORMAT",
            Error::Mismatch(_) => "E_MISMATCH",
            Error::DegenerateCorrection(_) => "E_DEGENERATE",
            Error::NotSymmetric { .. } => "E_ASYMMETRIC",
            Error::Io(_) => "E_IO",
            Error::InFile { source, .. } => source.code(),
        }
    }

    /// Process exit status: 1 for usage errors, 2 for data or format errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) => 1,
            Error::InFile { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
