use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("accuracy failure in {func}: {detail}")]
    Accuracy { func: &'static str, detail: String },

    #[error("zero finding failed for {order}: {detail}")]
    ZeroFinding { order: String, detail: String },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("integration failure at step {step}: {detail}")]
    Integration { step: usize, detail: String },

    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { func, detail: detail.into() }
    }

    pub(crate) fn accuracy(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Accuracy { func, detail: detail.into() }
    }
}
