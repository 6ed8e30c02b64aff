//! Finite-particle vectors of the algebraic Fock space `⊕ₙ H^{⊗n}`.

use serde::{Deserialize, Serialize};

use super::symmetrizer::q_inner;
use super::tensor::FockTensor;
use crate::error::{Error, Result};

/// A vector with finitely many nonzero particle sectors.
///
/// `sectors[k]` is the degree-`k` component; trailing sectors may be absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockVector {
    d: usize,
    sectors: Vec<FockTensor>,
}

impl FockVector {
    /// The zero vector.
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            sectors: Vec::new(),
        }
    }

    /// The vacuum `Ω`.
    pub fn vacuum(d: usize) -> Self {
        Self::from_tensor(FockTensor::scalar(d, 1.0))
    }

    /// A vector concentrated in one sector.
    pub fn from_tensor(t: FockTensor) -> Self {
        let mut v = Self::zero(t.dim());
        v.add_tensor(1.0, &t).expect("matching dimension");
        v
    }

    /// Dimension of the one-particle space.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// The degree-`k` component, if stored.
    pub fn sector(&self, k: usize) -> Option<&FockTensor> {
        self.sectors.get(k)
    }

    /// All stored sectors, indexed by degree.
    pub fn sectors(&self) -> &[FockTensor] {
        &self.sectors
    }

    /// Highest stored degree carrying a nonzero coefficient.
    pub fn max_degree(&self) -> Option<usize> {
        self.sectors.iter().rposition(|t| t.max_abs() != 0.0)
    }

    fn ensure_sector(&mut self, k: usize) -> Result<()> {
        while self.sectors.len() <= k {
            let deg = self.sectors.len();
            self.sectors.push(FockTensor::zeros(self.d, deg)?);
        }
        Ok(())
    }

    /// `self += factor · t` in the sector of `t`.
    pub fn add_tensor(&mut self, factor: f64, t: &FockTensor) -> Result<()> {
        if t.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: t.dim(),
            });
        }
        self.ensure_sector(t.degree())?;
        self.sectors[t.degree()].add_scaled(factor, t)
    }

    /// `self += factor · other`.
    pub fn add_scaled(&mut self, factor: f64, other: &FockVector) -> Result<()> {
        for t in &other.sectors {
            self.add_tensor(factor, t)?;
        }
        Ok(())
    }

    /// Euclidean (`F₀`) inner product.
    pub fn dot(&self, other: &FockVector) -> Result<f64> {
        self.sectors
            .iter()
            .zip(&other.sectors)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    /// q-deformed inner product, sector by sector.
    pub fn q_inner(&self, other: &FockVector, q: f64) -> Result<f64> {
        self.sectors
            .iter()
            .zip(&other.sectors)
            .map(|(a, b)| q_inner(a, b, q))
            .sum()
    }

    /// Euclidean (`F₀`) norm.
    pub fn norm(&self) -> f64 {
        self.sectors.iter().map(|t| t.norm().powi(2)).sum::<f64>().sqrt()
    }

    /// Largest absolute coefficient difference to `other`.
    pub fn max_abs_diff(&self, other: &FockVector) -> f64 {
        let n = self.sectors.len().max(other.sectors.len());
        (0..n)
            .map(|k| match (self.sector(k), other.sector(k)) {
                (Some(a), Some(b)) => a
                    .coeffs()
                    .iter()
                    .zip(b.coeffs())
                    .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs())),
                (Some(a), None) | (None, Some(a)) => a.max_abs(),
                (None, None) => 0.0,
            })
            .fold(0.0, f64::max)
    }
}
