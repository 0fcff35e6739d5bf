use std::fmt;

use thiserror::Error;

/// Errors raised by the sampling, enumeration and experiment routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("enumeration of {size} configurations exceeds the limit of {limit}")]
    EnumerationTooLarge { size: f64, limit: f64 },

    #[error("derivative bound L{order} is unbounded")]
    UnboundedDerivative { order: u8 },

    #[error("rejection sampler gave up after {attempts} attempts")]
    RetryBudgetExhausted { attempts: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("predicate is {value} on the whole bracket [{lo}, {hi}]")]
    ConstantPredicate { lo: f64, hi: f64, value: bool },

    #[error("{failed} of {total} trials failed (first: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl fmt::Display) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.to_string(),
        }
    }

    pub(crate) fn dim(msg: impl fmt::Display) -> Self {
        Error::InvalidDimension(msg.to_string())
    }

    pub(crate) fn non_finite(context: impl fmt::Display) -> Self {
        Error::NonFinite {
            context: context.to_string(),
        }
    }
}
