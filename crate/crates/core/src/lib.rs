//! Exact numerics for q-deformed Gaussian operator algebras.
//!
//! The crate is organised bottom-up:
//!
//! * [`combinat`] – pair contractions, shuffle cosets and the crossing-type
//!   statistics that carry the powers of `q`;
//! * [`fock`] – tensors, the q-symmetriser and exact creation, annihilation
//!   and Wick-block operators on truncated Fock spaces;
//! * [`wickalg`] – the symbolic algebra of Wick expansions, its product,
//!   vacuum moments and graded Banach norm;
//! * [`polywick`] – Wick products with operator insertions, their
//!   disentanglement into contractions and counterterm polynomials;
//! * [`qsde`] – q-Brownian increments, Lévy areas, the Chen relation, the
//!   renormalisation constant and discrete Itô residuals on a time grid.
//!
//! Scalars are real throughout, so the real structure of the one-particle
//! space is the identity.

pub mod combinat;
pub mod error;
pub mod fock;
pub mod polywick;
pub mod qsde;
pub mod wickalg;

pub use error::{Error, Result};

/// `q^n` with the convention `0⁰ = 1`.
pub fn qpow(q: f64, n: usize) -> f64 {
    q.powi(n as i32)
}
