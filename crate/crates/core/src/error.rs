use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("pencil eigenvalue {0} is below the clamping tolerance")]
    NegativeEigenvalue(f64),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("coherency condition violated: {0}")]
    CoherencyViolated(String),

    #[error("coherency paradox: {0}")]
    CoherencyParadox(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("rank mismatch: expected rank {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("sign condition on the common-trend block fails: {0}")]
    SignCondition(String),

    #[error("product enumeration of {count} exceeds the budget of {budget}")]
    Overflow { count: u128, budget: u128 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("no critical value for {0}")]
    MissingCriticalValue(String),

    #[error("singular limit draw: {0}")]
    SingularLimit(String),

    #[error("only {accepted} accepted draws for tau = {tau} (need {required})")]
    InsufficientAcceptedDraws {
        tau: f64,
        accepted: usize,
        required: usize,
    },

    #[error("no observations in the {0} regime")]
    EmptyRegime(&'static str),

    #[error("too few observations: {0}")]
    TooFewObservations(String),

    #[error("long-run variance of the {0} regime is zero")]
    ZeroLrv(&'static str),

    #[error("replication {rep} not retained after {attempts} attempts")]
    RetentionExhausted { rep: usize, attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
