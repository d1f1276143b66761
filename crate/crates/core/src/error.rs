use crate::timeseries::Quarter;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed quarter {0:?} (expected YYYYQn with n in 1..4)")]
    MalformedQuarter(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("{series}: gap between {after} and {next}")]
    Gap { series: String, after: Quarter, next: Quarter },

    #[error("line {line}: duplicate observation for {series} at {quarter}")]
    Duplicate { line: u64, series: String, quarter: Quarter },

    #[error("duplicate series {0}")]
    DuplicateSeries(String),

    #[error("{context}: non-positive value {value}")]
    NonPositive { context: String, value: f64 },

    #[error("{0}: non-finite value")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("insufficient data: need {needed} observations, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("too few observations: need {needed}, have {available}")]
    TooFewObservations { needed: usize, available: usize },

    #[error("design matrix is rank deficient (rank {rank} < {cols})")]
    RankDeficient { rank: usize, cols: usize },

    #[error("singular system")]
    Singular,

    #[error("{series} does not cover {quarter}")]
    Coverage { series: String, quarter: Quarter },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input) map to a distinct exit status.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. } | Error::Singular | Error::NonFinite(_)
        )
    }
}
