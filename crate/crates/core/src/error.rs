use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("covariance matrix is numerically singular (reciprocal condition number {rcond:e})")]
    SingularCovariance { rcond: f64 },

    #[error("{depth} depth is not supported in dimension {dim}")]
    UnsupportedDimension { depth: &'static str, dim: usize },

    #[error("bootstrap draws have zero variance in coordinate {coordinate}")]
    DegenerateDraws { coordinate: usize },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("region grids are only supported for 1- or 2-dimensional parameters (got {dim})")]
    GridUnsupported { dim: usize },

    #[error("search box has zero volume along coordinate {coordinate}")]
    SearchBoxDegenerate { coordinate: usize },

    #[error("degrees of freedom too small: {0}")]
    DegreesOfFreedom(String),

    #[error("sample correlation is degenerate (|r| = 1 or undefined)")]
    DegenerateCorrelation,

    #[error("estimator `{0}` has no covariance estimate for studentization")]
    StudentizationUnavailable(String),

    #[error("too many failed replications: {failed} of {reps} (limit {limit})")]
    TooManyFailures { failed: usize, reps: usize, limit: usize },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
