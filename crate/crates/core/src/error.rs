//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the combinatorial, Fock-space and Wick-algebra routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two objects that must live over the same one-particle space do not.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A tensor of the wrong degree was supplied.
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },

    /// Two pairings that were required to be disjoint share a label.
    #[error("pairings not disjoint")]
    PairingsNotDisjoint,

    /// A pairing, index set or partition violates its structural invariants.
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    /// An argument lies outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operator was applied outside the sectors on which it is exact.
    #[error("sector {sector} is outside the exact range (exact up to {exact_upto:?}) at cutoff {cutoff}")]
    NotExact {
        sector: usize,
        exact_upto: Option<usize>,
        cutoff: usize,
    },

    /// The graded Banach norm and its constants only exist for |q| < 1.
    #[error("norm undefined at q = ±1")]
    NormUndefined,

    /// A time lies off the grid.
    #[error("time {0} is not aligned with the grid")]
    NotGridAligned(f64),

    /// A mollifier does not integrate to one.
    #[error("mollifier is not normalised: integral = {0}")]
    NotNormalized(f64),

    /// An empty sector range was handed to a norm estimator.
    #[error("empty sector range")]
    EmptyRange,
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// A stable, machine-readable name for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::DegreeMismatch { .. } => "degree_mismatch",
            Error::PairingsNotDisjoint => "pairings_not_disjoint",
            Error::InvalidStructure(_) => "invalid_structure",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NotExact { .. } => "not_exact",
            Error::NormUndefined => "norm_undefined",
            Error::NotGridAligned(_) => "not_grid_aligned",
            Error::NotNormalized(_) => "not_normalized",
            Error::EmptyRange => "empty_range",
        }
    }
}
