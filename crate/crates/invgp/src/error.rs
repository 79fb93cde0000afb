//! Error type shared across the crate.

use crate::spectral::{BasisTag, Point};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A point lies outside the domain it was evaluated on.
    #[error("point ({}, {}) outside domain {domain}", point.0, point.1)]
    Domain { point: Point, domain: &'static str },

    /// A series was used with an operator basis it was not expressed in.
    #[error("basis mismatch: series carries {found}, operation expects {expected}")]
    BasisMismatch { expected: BasisTag, found: BasisTag },

    /// Invalid parameter (sizes, signs, ranges).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A factorization or eigensolve failed beyond the jitter budget.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Input data unusable for the requested computation.
    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
