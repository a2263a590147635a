use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("malformed query: {0}")]
    MalformedQuery(String),
    #[error("query rejected: {0}")]
    Rejected(String),
    #[error("bound exceeded: {0}")]
    BoundExceeded(String),
    #[error("internal verification failure: {0}")]
    InternalVerification(String),
    #[error("assertion failed in phase {phase}: {detail}")]
    Assert { phase: String, detail: String },
    #[error("unbounded linear program")]
    Unbounded,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn assert_fail(phase: &str, detail: impl Into<String>) -> Error {
    Error::Assert {
        phase: phase.to_string(),
        detail: detail.into(),
    }
}
