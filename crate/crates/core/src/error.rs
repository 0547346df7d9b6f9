use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("term on support {support:?} is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitian { support: Vec<usize>, deviation: f64 },

    #[error("unsupported local dimension {0}: must be a power of two")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("size limit exceeded: {what} needs {needed}, limit is {limit}")]
    SizeLimit {
        what: String,
        needed: usize,
        limit: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("enumeration cap of {cap} exceeded ({detail}); use a larger gamma or direct mode")]
    EnumerationCap { cap: u64, detail: String },

    #[error("constraint set is infeasible")]
    Infeasible,

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn size(what: impl Into<String>, needed: usize, limit: usize) -> Self {
        Error::SizeLimit {
            what: what.into(),
            needed,
            limit,
        }
    }
}
