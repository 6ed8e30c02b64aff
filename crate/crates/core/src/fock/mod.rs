//! The q-deformed Fock space realised exactly in finite dimensions.
//!
//! This module is the independent oracle for the symbolic Wick algebra: every
//! operator here is an explicit block matrix on `⊕_{k ≤ N} H^{⊗k}` with
//! `H = ℝ^d`, built directly from the defining formulas of creation,
//! annihilation and Wick-block operators.
//!
//! For `q = ±1` the symmetriser is degenerate; operators then act on the full
//! tensor space without quotienting by its kernel, which is enough for every
//! algebraic identity checked by the crate.

mod norm;
mod operator;
mod symmetrizer;
mod tensor;
mod vector;

pub use norm::{
    largest_singular_value, operator_norm, Metric, NORM_MAX_ITERATIONS, NORM_SEED,
    NORM_TOLERANCE,
};
pub use operator::{
    annihilate, apply_wick_kernel, multi_annihilate, wick_block_kernel, TruncatedOperator,
};
pub use symmetrizer::{
    apply_pq, pq_matrix, pq_spectrum, q_factorial, q_inner, SymmetriserSpectrum, DENSE_LIMIT,
};
pub use tensor::FockTensor;
pub use vector::FockVector;
