//! The q-symmetriser `P_q` and the q-deformed inner product.

use nalgebra::{DMatrix, SymmetricEigen};

use super::tensor::{checked_pow, FockTensor};
use crate::combinat::permutations_with_inversions;
use crate::error::{Error, Result};
use crate::qpow;

/// Largest `d^n` for which dense eigen-decompositions are attempted.
pub const DENSE_LIMIT: usize = 10_000;

/// `P_q F = Σ_{σ ∈ S_n} q^{|σ|} U_σ F`, where `U_σ` permutes tensor slots.
pub fn apply_pq(t: &FockTensor, q: f64) -> FockTensor {
    let mut out = FockTensor::zeros(t.dim(), t.degree()).expect("shape of an existing tensor");
    for (perm, inv) in permutations_with_inversions(t.degree()) {
        let w = qpow(q, inv);
        if w != 0.0 {
            let moved = t.permute_slots(&perm).expect("permutation of matching length");
            out.add_scaled(w, &moved).expect("same shape");
        }
    }
    out
}

/// The dense `d^n × d^n` matrix of `P_q` on `H^{⊗n}` in word order.
pub fn pq_matrix(d: usize, n: usize, q: f64) -> Result<DMatrix<f64>> {
    let size = checked_pow(d, n)?;
    if size > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "dense symmetriser of size {size} exceeds {DENSE_LIMIT}"
        )));
    }
    let mut m = DMatrix::zeros(size, size);
    for col in 0..size {
        let mut e = FockTensor::zeros(d, n)?;
        e.coeffs_mut()[col] = 1.0;
        let image = apply_pq(&e, q);
        for (row, &v) in image.coeffs().iter().enumerate() {
            m[(row, col)] = v;
        }
    }
    Ok(m)
}

/// The q-inner product `⟨F, P_q G⟩`, zero between different degrees.
pub fn q_inner(f: &FockTensor, g: &FockTensor, q: f64) -> Result<f64> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: g.dim(),
        });
    }
    if f.degree() != g.degree() {
        return Ok(0.0);
    }
    f.dot(&apply_pq(g, q))
}

/// Extreme eigenvalues of `P_q` restricted to `H^{⊗n}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetriserSpectrum {
    /// Smallest eigenvalue.
    pub min: f64,
    /// Largest eigenvalue.
    pub max: f64,
}

impl SymmetriserSpectrum {
    /// Operator norm (largest absolute eigenvalue).
    pub fn norm(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }
}

/// Smallest and largest eigenvalue of `P_q` on `H^{⊗n}` via a dense eigensolve.
pub fn pq_spectrum(d: usize, n: usize, q: f64) -> Result<SymmetriserSpectrum> {
    let m = pq_matrix(d, n, q)?;
    let eig = SymmetricEigen::new(m);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SymmetriserSpectrum { min, max })
}

/// `[n]_x! = Π_{k=1}^{n} (1 − x^k)/(1 − x)`, with the limit `n!` at `x = 1`.
pub fn q_factorial(n: usize, x: f64) -> f64 {
    (1..=n)
        .map(|k| {
            // (1 − x^k)/(1 − x) = 1 + x + … + x^{k−1}
            (0..k).map(|j| qpow(x, j)).sum::<f64>()
        })
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degree_one_symmetriser_is_identity() {
        let m = pq_matrix(3, 1, 0.7).unwrap();
        assert_eq!(m, DMatrix::identity(3, 3));
    }

    #[test]
    fn two_particle_plane_has_eigenvalues_one_plus_minus_q() {
        let q = 0.3;
        let m = pq_matrix(2, 2, q).unwrap();
        // Words (0,1) and (1,0) sit at indices 1 and 2.
        let plane = DMatrix::from_fn(2, 2, |i, j| m[(i + 1, j + 1)]);
        let eig = SymmetricEigen::new(plane);
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ev[0], 1.0 - q, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], 1.0 + q, epsilon = 1e-14);
    }

    #[test]
    fn three_particle_spectrum_at_one_half() {
        let s = pq_spectrum(3, 3, 0.5).unwrap();
        assert!(s.min > 0.0);
        assert!(s.norm() <= 8.0);
    }

    #[test]
    fn q_inner_examples() {
        let f = FockTensor::vector(&[1.0, 0.0]);
        let g = FockTensor::vector(&[0.0, 1.0]);
        let fg = f.tensor(&g).unwrap();
        assert_abs_diff_eq!(q_inner(&fg, &fg, 0.4).unwrap(), 1.0, epsilon = 1e-15);
        let ff = f.tensor(&f).unwrap();
        assert_abs_diff_eq!(q_inner(&ff, &ff, 0.4).unwrap(), 1.4, epsilon = 1e-15);
        assert_eq!(q_inner(&f, &ff, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn q_factorial_values() {
        assert_abs_diff_eq!(q_factorial(3, 1.0), 6.0);
        assert_abs_diff_eq!(q_factorial(3, 0.5), 1.0 * 1.5 * 1.75);
        assert_abs_diff_eq!(q_factorial(0, 0.5), 1.0);
    }
}
