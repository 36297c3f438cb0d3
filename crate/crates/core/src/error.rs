use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NonHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NonUnitary(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid pure state: norm {0}")]
    InvalidPureState(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires local dimensions {expected}, got {got_a}x{got_b}")]
    WrongDimension {
        expected: &'static str,
        got_a: usize,
        got_b: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("filter succeeds with probability {0:e}; filtered state undefined")]
    ZeroProbability(f64),

    #[error("kappa = {0} exceeds 1; q lies outside the admissible interval")]
    KappaOutOfRange(f64),

    #[error("filter operator norm {0} exceeds 1")]
    NormViolation(f64),

    #[error("entanglement test inconclusive (partial transpose PSD at {dim_a}x{dim_b})")]
    Inconclusive { dim_a: usize, dim_b: usize },

    #[error("no named filter for this state; use the optimized strategy")]
    UnknownFamily,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
