use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("covariance factorization failed at leading minor {minor} (pivot {pivot:e})")]
    Factorization { minor: usize, pivot: f64 },

    #[error(
        "circulant embedding of size {size} has eigenvalue {value:e}; \
         double the embedding size or reduce the grid"
    )]
    Embedding { size: usize, value: f64 },

    #[error("regularity error: {0}")]
    Regularity(String),

    #[error("solution left the blow-up guard at step {step}: |x| = {norm:e} > {bound:e}")]
    BlowUp { step: usize, norm: f64, bound: f64 },

    #[error("hypothesis gate: {0}")]
    Hypothesis(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

impl Error {
    /// A copy for reporting the same failure in several places; I/O and
    /// format errors keep only their message.
    pub(crate) fn replicate(&self) -> Error {
        match self {
            Self::InvalidInput(m) => Self::InvalidInput(m.clone()),
            Self::Domain(m) => Self::Domain(m.clone()),
            Self::Factorization { minor, pivot } => Self::Factorization {
                minor: *minor,
                pivot: *pivot,
            },
            Self::Embedding { size, value } => Self::Embedding {
                size: *size,
                value: *value,
            },
            Self::Regularity(m) => Self::Regularity(m.clone()),
            Self::BlowUp { step, norm, bound } => Self::BlowUp {
                step: *step,
                norm: *norm,
                bound: *bound,
            },
            Self::Hypothesis(m) => Self::Hypothesis(m.clone()),
            Self::Parse(m) => Self::Parse(m.clone()),
            other => Self::InvalidInput(other.to_string()),
        }
    }
}
