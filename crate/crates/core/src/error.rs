use thiserror::Error;

/// Errors produced by the cost models, splitting operators and the online loop.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step-size rho = {rho} violates {requirement}")]
    StepSize { rho: f64, requirement: String },

    #[error("singular matrix in {factorization}")]
    Singular { factorization: &'static str },

    #[error("matrix is not symmetric positive definite: {detail}")]
    NotPositiveDefinite { detail: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("missing capability: {0}")]
    MissingCapability(&'static str),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
