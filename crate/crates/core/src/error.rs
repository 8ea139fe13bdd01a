use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A value was evaluated outside the region where the operation is defined.
    #[error("{what}: value {value} outside domain [{lo}, {hi}]")]
    OutOfDomain { what: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("density vanishes at {0}")]
    ZeroDensity(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("unknown query-advertiser pair ({query}, {advertiser})")]
    UnknownPair { query: String, advertiser: usize },
    #[error("generation failed after {retries} retries: {reason}")]
    Generation { retries: usize, reason: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
