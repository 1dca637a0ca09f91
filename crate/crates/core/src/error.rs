use thiserror::Error;

/// Errors raised across model construction, causal analysis and synthesis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("construction error at node {node:?}: {message}")]
    Construction { node: (usize, usize), message: String },

    #[error("value {value} outside admissible range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("causality violation: {0}")]
    Causality(String),

    #[error("precondition failed at node {node:?}: {message}")]
    Precondition { node: (usize, usize), message: String },

    #[error("synthesis failure in {stage}: {message}")]
    Synthesis { stage: String, message: String },

    #[error("input error: {0}")]
    Input(String),

    #[error("invariant failure: {0}")]
    Invariant(String),

    #[error("refinement needed: {0}")]
    Refinement(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    pub(crate) fn synthesis(stage: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Synthesis { stage: stage.into(), message: message.into() }
    }
}
