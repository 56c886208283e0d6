use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed configuration text.
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Well-formed input that violates an invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field contains non-finite values ({0})")]
    NonFinite(String),

    #[error("numerical instability at t = {time}: {msg}")]
    Instability { time: f64, msg: String },

    #[error("boundary contamination at t = {time}: support width {width} exceeds {limit}")]
    BoundaryContamination { time: f64, width: f64, limit: f64 },

    #[error("calibration failure: {0}")]
    Calibration(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("mismatched runs: {0}")]
    MismatchedRuns(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the CLI: 1 validation/parse, 2 numerical
    /// failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::Config(_)
            | Error::GridMismatch(_)
            | Error::MismatchedRuns(_) => 1,
            Error::NonFinite(_)
            | Error::Instability { .. }
            | Error::BoundaryContamination { .. }
            | Error::Calibration(_)
            | Error::Numerical(_)
            | Error::InsufficientData(_) => 2,
            Error::Io { .. } => 3,
        }
    }
}
