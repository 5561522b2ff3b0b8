use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weight vector is empty")]
    EmptyWeights,

    #[error("power budget must be positive and finite, got {0}")]
    InvalidPower(f64),

    #[error("dimensions must be positive")]
    ZeroDimension,

    #[error("{users} users exceeds the enumeration limit of {limit}")]
    TooManyUsers { users: usize, limit: usize },

    #[error("water level must be non-negative, got {0}")]
    NegativeWaterLevel(f64),

    #[error("eigenvalues are not sorted in non-increasing order")]
    UnsortedEigenvalues,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line search stalled after {trials} trials")]
    LineSearchStalled { trials: usize },

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
