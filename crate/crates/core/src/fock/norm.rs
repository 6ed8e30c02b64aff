//! Power-iteration estimates of operator norms on truncated Fock spaces.

use std::ops::RangeInclusive;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operator::TruncatedOperator;
use super::symmetrizer::pq_matrix;
use crate::error::{Error, Result};

/// Relative tolerance on successive singular-value estimates.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Iteration cap of the power method.
pub const NORM_MAX_ITERATIONS: usize = 10_000;
/// Seed of the start vector.
pub const NORM_SEED: u64 = 0x5eed_0f0c;

/// Inner product used on each particle sector when measuring norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    /// Euclidean tensor inner product (the `q = 0` Fock space).
    Free,
    /// q-deformed inner product `⟨·, P_q ·⟩`; requires `|q| < 1`.
    Deformed(f64),
}

/// Largest singular value of `op` restricted to the input sectors in `sectors`.
///
/// Outputs are measured on every sector the restricted operator reaches. In
/// the deformed metric each block is conjugated by Cholesky factors of the
/// symmetriser so that the Euclidean power method applies.
pub fn operator_norm(
    op: &TruncatedOperator,
    sectors: RangeInclusive<usize>,
    metric: Metric,
) -> Result<f64> {
    if sectors.is_empty() {
        return Err(Error::EmptyRange);
    }
    let (lo, hi) = (*sectors.start(), *sectors.end());
    if !op.is_exact(hi) {
        return Err(Error::NotExact {
            sector: hi,
            exact_upto: op.exact_upto(),
            cutoff: op.cutoff(),
        });
    }
    let q = match metric {
        Metric::Free => None,
        Metric::Deformed(q) if q.abs() < 1.0 => Some(q),
        Metric::Deformed(_) => return Err(Error::NormUndefined),
    };
    let d = op.dim();
    let sector_dim = |k: usize| d.pow(k as u32);

    let outputs: Vec<usize> = {
        let mut o: Vec<usize> = op
            .blocks()
            .keys()
            .filter(|(from, _)| sectors.contains(from))
            .map(|&(_, to)| to)
            .collect();
        o.sort_unstable();
        o.dedup();
        o
    };
    let col_offset: Vec<usize> = (lo..=hi)
        .scan(0, |acc, k| {
            let start = *acc;
            *acc += sector_dim(k);
            Some(start)
        })
        .collect();
    let cols: usize = (lo..=hi).map(sector_dim).sum();
    let rows: usize = outputs.iter().map(|&k| sector_dim(k)).sum();
    if rows == 0 {
        return Ok(0.0);
    }

    // Factors L_k with P_q = L_k L_kᵀ on sector k.
    let factor = |k: usize| -> Result<Option<DMatrix<f64>>> {
        match q {
            None => Ok(None),
            Some(q) => {
                let p = pq_matrix(d, k, q)?;
                let chol = Cholesky::new(p).ok_or_else(|| {
                    Error::InvalidArgument("symmetriser is not positive definite".into())
                })?;
                Ok(Some(chol.l()))
            }
        }
    };

    let mut full = DMatrix::zeros(rows, cols);
    let mut row_offset = 0;
    for &to in &outputs {
        let l_out = factor(to)?;
        for from in lo..=hi {
            if let Some(block) = op.block(from, to) {
                let mut b = block.clone();
                if let Some(l_out) = &l_out {
                    b = l_out.transpose() * b;
                }
                if let Some(l_in) = factor(from)? {
                    // b · L_in^{−ᵀ}: solve L_in · Xᵀ = bᵀ.
                    let xt = l_in
                        .solve_lower_triangular(&b.transpose())
                        .ok_or_else(|| Error::InvalidArgument("singular factor".into()))?;
                    b = xt.transpose();
                }
                full.view_mut((row_offset, col_offset[from - lo]), b.shape())
                    .copy_from(&b);
            }
        }
        row_offset += sector_dim(to);
    }
    Ok(largest_singular_value(&full))
}

/// Largest singular value of a dense matrix by power iteration on `MᵀM`.
pub fn largest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_SEED);
    let mut v = DVector::from_fn(m.ncols(), |_, _| rng.gen_range(-1.0..1.0));
    let n = v.norm();
    if n == 0.0 {
        return 0.0;
    }
    v /= n;
    let mut estimate: f64 = 0.0;
    for _ in 0..NORM_MAX_ITERATIONS {
        let w = m * &v;
        let sigma = w.norm();
        let z = m.transpose() * w;
        let zn = z.norm();
        if zn == 0.0 {
            return sigma;
        }
        v = z / zn;
        if (sigma - estimate).abs() <= NORM_TOLERANCE * sigma.max(f64::MIN_POSITIVE) {
            return sigma;
        }
        estimate = sigma;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::tensor::FockTensor;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_has_unit_norm() {
        let id = TruncatedOperator::identity(2, 3).unwrap();
        assert_abs_diff_eq!(
            operator_norm(&id, 0..=3, Metric::Free).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn free_creation_is_an_isometry() {
        let cre = TruncatedOperator::creation(&[0.6, 0.8], 4).unwrap();
        assert_abs_diff_eq!(
            operator_norm(&cre, 0..=3, Metric::Free).unwrap(),
            1.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn deformed_creation_norm_grows_towards_its_limit() {
        let q: f64 = 0.5;
        let limit = (1.0 / (1.0 - q)).sqrt();
        let mut previous = 0.0;
        for n in [2, 4, 8] {
            let cre = TruncatedOperator::creation(&[1.0], n).unwrap();
            let est = operator_norm(&cre, 0..=n - 1, Metric::Deformed(q)).unwrap();
            assert!(est >= previous - 1e-12);
            assert!(est <= limit + 1e-9);
            previous = est;
        }
        assert!(previous > 0.98 * limit);
    }

    #[test]
    fn free_field_norm_approaches_two() {
        let n = 40;
        let xi = TruncatedOperator::field(&[1.0], 0.0, n).unwrap();
        let est = operator_norm(&xi, 0..=n - 1, Metric::Free).unwrap();
        assert!(est < 2.0 && est > 1.99, "estimate {est}");
    }

    #[test]
    fn empty_range_is_rejected() {
        let id = TruncatedOperator::identity(1, 2).unwrap();
        #[allow(clippy::reversed_empty_ranges)]
        let r = operator_norm(&id, 2..=1, Metric::Free);
        assert_eq!(r, Err(Error::EmptyRange));
    }

    #[test]
    fn deformed_metric_requires_strict_q() {
        let w = TruncatedOperator::wick_block(0, 0, &FockTensor::scalar(1, 1.0), 1.0, 2).unwrap();
        assert_eq!(
            operator_norm(&w, 0..=2, Metric::Deformed(1.0)),
            Err(Error::NormUndefined)
        );
    }
}
