use thiserror::Error;

/// Errors produced by the forward models, the simulator and the estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown probe label `{0}`")]
    UnknownLabel(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("probe frame spans {rank} dimensions, {required} are required")]
    RankDeficient { rank: usize, required: usize },

    #[error("order-{order} correlation is undefined for a {kind} source without an explicit table")]
    UndefinedCorrelation { order: u32, kind: String },

    #[error("expected count {0} is not representable")]
    CountOverflow(f64),

    #[error("missing {0}")]
    Missing(String),

    #[error("non-finite result in {0}")]
    NonFinite(String),

    #[error(
        "maximum likelihood did not converge after {iterations} iterations \
         (last gain {last_gain:e}, log-likelihood {log_likelihood})"
    )]
    NonConvergence {
        iterations: usize,
        last_gain: f64,
        log_likelihood: f64,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
