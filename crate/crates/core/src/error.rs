use thiserror::Error;

/// Crate-wide error type. Each variant corresponds to one of the stable
/// error codes surfaced by the CLI.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("unknown node address: {0}")]
    UnknownAddress(String),

    #[error("no omega-chain: {0}")]
    NoChain(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("set is not downward closed: {0}")]
    NotDownwardClosed(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("blocks do not partition the poset: {0}")]
    Partition(String),

    #[error("truncation too shallow: {0}")]
    Depth(String),

    #[error("unsupported presentation: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("witness pool exhausted: {0}")]
    PoolExhausted(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("search cap exceeded: {0}")]
    CapExceeded(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable code for CLI reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownAddress(_) => "address-error",
            Error::NoChain(_) => "no-chain",
            Error::Capacity(_) => "capacity-error",
            Error::NotDownwardClosed(_) => "closure-error",
            Error::Contract(_) => "contract-error",
            Error::Partition(_) => "partition-error",
            Error::Depth(_) => "depth-error",
            Error::Unsupported(_) => "unsupported",
            Error::Precondition(_) => "precondition-error",
            Error::PoolExhausted(_) => "pool-exhausted",
            Error::Format(_) => "format-error",
            Error::CapExceeded(_) => "cap-exceeded",
            Error::Parse(_) => "parse-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
