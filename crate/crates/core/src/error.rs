use thiserror::Error;

pub type Result<T, E = MadError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MadError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("operation not supported on {domain} domain: {reason}")]
    UnsupportedDomain {
        domain: &'static str,
        reason: &'static str,
    },

    #[error("parameter {t} outside [0, {length})")]
    ParameterOutOfRange { t: f64, length: f64 },

    #[error("kernel evaluated at its singularity")]
    Singularity,

    #[error("generator {generator} is incompatible with {equation}")]
    Incompatible { generator: String, equation: String },

    #[error("covariance factorization failed after jitter escalation up to {jitter:e}")]
    Factorization { jitter: f64 },

    #[error("linear solver did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("dataset record is missing {0}")]
    MissingField(&'static str),

    #[error("reference field has zero norm")]
    ZeroNorm,

    #[error("malformed file: {0}")]
    Format(String),

    #[error("unsupported file version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl MadError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        MadError::InvalidArgument(msg.into())
    }
}
