use std::path::PathBuf;

use thiserror::Error;

use crate::date::YearMonth;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(String),

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("gap in monthly dates: expected {expected}, found {found}")]
    GapInDates {
        expected: YearMonth,
        found: YearMonth,
    },

    #[error("duplicate or unordered date {0}")]
    UnorderedDates(YearMonth),

    #[error("missing value at row {row}, column '{column}'")]
    MissingValue { row: usize, column: String },

    #[error("column '{0}' not found")]
    MissingColumn(String),

    #[error("duplicate column id '{0}'")]
    DuplicateColumn(String),

    #[error("non-finite value in series '{0}'")]
    NonFinite(String),

    #[error("series '{0}' contains a non-positive value")]
    NonPositiveValue(String),

    #[error("series '{0}' has zero variance")]
    ZeroVariance(String),

    #[error("too few observations: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("dates do not align: {0}")]
    DateMisalignment(String),

    #[error("eigen-solver did not converge after {sweeps} sweeps (off-diagonal {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("regressors are collinear")]
    CollinearRegressors,

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("covariance matrix not positive definite at t={0}")]
    NonPositiveDefinite(usize),

    #[error("optimizer diverged: {0}")]
    OptimizerDiverged(String),

    #[error("parameters imply a non-stationary process: {0}")]
    NonStationaryParams(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("quantile {0} outside (0, 1)")]
    TauOutOfRange(f64),

    #[error("no observations remain after lag/lead alignment")]
    AlignmentEmpty,

    #[error("{0} candidates exceed the exhaustive-enumeration limit of 20")]
    TooManyCandidates(usize),

    #[error("infeasible trimming: {0}")]
    InfeasibleTrim(String),

    #[error("segment too short: {got} observations, need {needed}")]
    SegmentTooShort { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
