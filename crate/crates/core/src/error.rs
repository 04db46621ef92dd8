use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("rank deficiency at index {index}: {context}")]
    RankDeficient { index: usize, context: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no convergence after {sweeps} sweeps in {routine}")]
    NoConvergence { routine: &'static str, sweeps: usize },

    #[error("iteration diverged: relative residual {residual:.3e} at iteration {iteration}; reduce delta")]
    Diverged { iteration: usize, residual: f64 },

    #[error("size cap exceeded: dimension {dim} > cap {cap}")]
    SizeCap { dim: usize, cap: usize },

    #[error("index ({row}, {col}) out of range for {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for process exit codes and C error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) | Error::SizeCap { .. } => ErrorClass::Config,
            Error::RankDeficient { .. }
            | Error::Degenerate(_)
            | Error::NoConvergence { .. }
            | Error::Diverged { .. }
            | Error::NonFinite(_) => ErrorClass::Numerical,
            Error::InvalidDimensions(_)
            | Error::DimensionMismatch(_)
            | Error::IndexOutOfRange { .. }
            | Error::Empty(_)
            | Error::Parse { .. }
            | Error::Unsupported(_)
            | Error::Io(_) => ErrorClass::Data,
        }
    }

    /// Prepend caller context to rank-deficiency errors, leaving other kinds untouched.
    pub(crate) fn with_advice(self, advice: &str) -> Error {
        match self {
            Error::RankDeficient { index, context } => Error::RankDeficient {
                index,
                context: format!("{context}; {advice}"),
            },
            Error::Degenerate(msg) => Error::Degenerate(format!("{msg}; {advice}")),
            other => other,
        }
    }
}
