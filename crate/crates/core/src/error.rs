use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("table has no data rows")]
    EmptyTable,
    #[error("table has no {0} columns")]
    NoColumns(&'static str),
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: String },
    #[error("observed statistics have length {found}, table has {expected} statistics")]
    ObservedLength { expected: usize, found: usize },
    #[error("non-finite observed statistic at position {0}")]
    NonFiniteObserved(usize),
    #[error("statistic `{0}` has zero scale; drop the constant column or use standardization=none")]
    ZeroScale(String),
    #[error("bandwidth is zero: the observed statistics are duplicated in at least the requested number of simulations; give an explicit bandwidth")]
    ZeroBandwidth,
    #[error("no accepted simulations")]
    NoAccepted,
    #[error("weights must be finite and non-negative")]
    InvalidWeights,
    #[error("regression needs at least {needed} rows with positive weight, found {found}")]
    InsufficientRows { needed: usize, found: usize },
    #[error("weighted design matrix is rank deficient; use ridge regression")]
    RankDeficient,
    #[error("non-finite loss at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("degenerate residuals for parameter {0}; heteroscedastic adjustment unavailable")]
    DegenerateResiduals(usize),
    #[error("value at row {row}, column {column} lies outside the transform support")]
    OutsideSupport { row: usize, column: usize },
    #[error("conditional sd at row {0} is below 1e-12 times the sd at the observation")]
    VarianceFloor(usize),
    #[error("degenerate sample; density unavailable")]
    DegenerateSample,
    #[error("rejection sample has zero variance for parameter {0}")]
    ZeroVariance(usize),
    #[error("no analytic posterior for toy model `{0}`")]
    NoAnalyticPosterior(&'static str),
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::EmptyTable
            | Error::NoColumns(_)
            | Error::DimensionMismatch { .. }
            | Error::NonFinite { .. }
            | Error::ObservedLength { .. }
            | Error::NonFiniteObserved(_)
            | Error::ZeroScale(_)
            | Error::InvalidWeights
            | Error::OutsideSupport { .. }
            | Error::TooFewPoints { .. } => ErrorKind::Data,
            _ => ErrorKind::Numerical,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
