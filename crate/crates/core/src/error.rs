use std::path::PathBuf;

use thiserror::Error;

/// Broad class of a failure, used to pick process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments, configuration or parameters.
    Usage,
    /// Input data is missing, malformed or inconsistent.
    Data,
    /// An internal numerical invariant was broken.
    Invariant,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {reason}")]
    MalformedRow {
        file: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{file}:{line}: non-positive price {close} for {ticker}")]
    NonPositivePrice {
        file: PathBuf,
        line: u64,
        ticker: String,
        close: f64,
    },

    #[error("{file}:{line}: duplicate (ticker, date) ({ticker}, {date})")]
    DuplicateDate {
        file: PathBuf,
        line: u64,
        ticker: String,
        date: chrono::NaiveDate,
    },

    #[error("no price data found in {0}")]
    NoData(PathBuf),

    #[error("fewer than 2 series (got {0})")]
    TooFewSeries(usize),

    #[error("empty calendar after alignment")]
    EmptyIntersection,

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("window width {width} exceeds the {available} available returns")]
    WindowTooWide { width: usize, available: usize },

    #[error("unknown ticker {0}")]
    UnknownTicker(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("correlation matrix is not positive semi-definite (pivot {pivot} = {value:e})")]
    NotPositiveSemiDefinite { pivot: usize, value: f64 },

    #[error("correlation between {0} and {1} is undefined (zero variance)")]
    UndefinedCorrelation(String, String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_)
            | Error::WindowTooWide { .. }
            | Error::UnknownTicker(_)
            | Error::NotPositiveSemiDefinite { .. } => ErrorKind::Usage,
            Error::Invariant(_) => ErrorKind::Invariant,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
