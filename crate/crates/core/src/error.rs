use thiserror::Error;

/// Errors raised by the fitting, selection and ingestion routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {func}: argument {value} is outside the admissible range")]
    Domain { func: &'static str, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("sample too small: need at least {needed} observations, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("non-positive observation {0}; amounts must be strictly positive")]
    NonPositiveObservation(f64),

    #[error("all observations are equal; the likelihood has no finite maximiser")]
    NonIdentifiable,

    #[error("sample CV statistic {0} is below one; mean and variance cannot both be matched")]
    CvLessThanOne(f64),

    #[error("iteration limit of {0} reached before convergence")]
    MaxItersExceeded(usize),

    #[error("gradient step left the parameter domain after {0} halvings")]
    StepLeavesDomain(usize),

    #[error("no admissible MGW maximum-likelihood candidate")]
    NoAdmissibleCandidate,

    #[error("malformed record on line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("duplicate record for site {site} on {date}")]
    DuplicateRecord { site: String, date: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(func: &'static str, value: f64) -> Error {
    Error::Domain { func, value }
}
