use thiserror::Error;

/// Errors raised by the ensemble algebra, models, filters and experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no effective observations at this analysis point")]
    AllWeightsZero,

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("non-finite state{}", context_suffix(*.cycle, *.member))]
    NonFiniteState {
        cycle: Option<usize>,
        member: Option<usize>,
    },

    #[error("observation position {position} outside grid of size {n}")]
    IndexOutOfRange { position: f64, n: usize },

    #[error("particle weights sum to {sum}, expected {expected}")]
    WeightSumMismatch { sum: f64, expected: f64 },

    #[error("analysis grid does not cover model grid point {0}")]
    CoverageGap(usize),

    #[error("non-positive input at index {0}")]
    NonPositiveInput(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn context_suffix(cycle: Option<usize>, member: Option<usize>) -> String {
    match (cycle, member) {
        (Some(c), Some(m)) => format!(" (cycle {c}, member {m})"),
        (Some(c), None) => format!(" (cycle {c})"),
        (None, Some(m)) => format!(" (member {m})"),
        (None, None) => String::new(),
    }
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidEnsemble(_) => "InvalidEnsemble",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::AllWeightsZero => "AllWeightsZero",
            Error::NotSymmetric(_) => "NotSymmetric",
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
            Error::NotPositiveSemidefinite(_) => "NotPositiveSemidefinite",
            Error::NonFiniteState { .. } => "NonFiniteState",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::WeightSumMismatch { .. } => "WeightSumMismatch",
            Error::CoverageGap(_) => "CoverageGap",
            Error::NonPositiveInput(_) => "NonPositiveInput",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
            Error::Csv(_) => "CsvError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
