use std::path::PathBuf;

/// Errors produced by the estimation library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix of size {rows} x {cols} overflows the addressable size")]
    SizeOverflow { rows: usize, cols: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{routine} did not converge on a {rows} x {cols} input")]
    NoConvergence {
        routine: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("term {term}: {factor} is not positive semidefinite (min eigenvalue {eigenvalue:e})")]
    NotPsd {
        term: usize,
        factor: &'static str,
        eigenvalue: f64,
    },

    #[error("term {term}: {factor} is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric {
        term: usize,
        factor: &'static str,
        asymmetry: f64,
    },

    #[error("delta condition violated: left side {lhs} exceeds 1")]
    DeltaCondition { lhs: f64 },

    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error("parse error in {origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(origin: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            origin: origin.into(),
            message: message.to_string(),
        }
    }
}
