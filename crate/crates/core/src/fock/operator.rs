//! Exact operators on the Fock space truncated at `N` particles.
//!
//! Operators are stored as dense blocks `(input degree, output degree) ↦
//! matrix`, built from matrix-free tensor actions. An operator only stores
//! blocks for the input sectors on which it is *exact*, i.e. where no
//! intermediate particle number exceeds the cutoff. Applying or composing an
//! operator outside that range is an error rather than a silent truncation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::tensor::{checked_pow, FockTensor};
use super::vector::FockVector;
use crate::combinat::coset_reps;
use crate::error::{Error, Result};
use crate::qpow;

/// `α_q(f) T = Σ_{i} q^{i−1} ⟨f, t_i⟩ t₁ ⊗ … t̂_i … ⊗ t_m` for a tensor `T`.
pub fn annihilate(f: &FockTensor, q: f64, t: &FockTensor) -> Result<FockTensor> {
    if f.degree() != 1 {
        return Err(Error::DegreeMismatch {
            expected: 1,
            found: f.degree(),
        });
    }
    let m = t.degree();
    if m == 0 {
        // The vacuum is annihilated; the result has no sector of degree −1.
        return Err(Error::InvalidArgument("annihilation of the vacuum sector".into()));
    }
    let mut out = FockTensor::zeros(t.dim(), m - 1)?;
    for i in 0..m {
        let w = qpow(q, i);
        if w == 0.0 {
            continue;
        }
        let mut source: Vec<usize> = vec![i];
        source.extend((0..m).filter(|&s| s != i));
        let moved = t.permute_slots(&source)?;
        out.add_scaled(w, &f.matmul_slots(&moved, 1)?)?;
    }
    Ok(out)
}

/// The tensor `N[j₁, …, j_ℓ, rest] = (α_q(e_{j₁}) ⋯ α_q(e_{j_ℓ}) T)[rest]`.
///
/// Built one annihilator at a time, innermost first.
pub fn multi_annihilate(ell: usize, q: f64, t: &FockTensor) -> Result<FockTensor> {
    let m = t.degree();
    if ell > m {
        return Err(Error::InvalidArgument(format!(
            "cannot annihilate {ell} particles from sector {m}"
        )));
    }
    let mut current = t.clone();
    for r in 1..=ell {
        let taken = r - 1;
        let mut next = FockTensor::zeros(t.dim(), m)?;
        for i in 0..=(m - r) {
            let w = qpow(q, i);
            if w == 0.0 {
                continue;
            }
            let mut source = vec![taken + i];
            source.extend(0..taken);
            source.extend((taken..m).filter(|&s| s != taken + i));
            next.add_scaled(w, &current.permute_slots(&source)?)?;
        }
        current = next;
    }
    Ok(current)
}

/// Kernel of the Wick block: `Σ_{σ ∈ S_{k+ℓ,k}} q^{|σ|} F^σ`, where for a
/// product tensor `F = f₁ ⊗ … ⊗ f_{k+ℓ}` the slot `p` of `F^σ` carries
/// `f_{σ⁻¹(p)}`. The first `k` slots of the kernel are created, the last `ℓ`
/// annihilated.
pub fn wick_block_kernel(k: usize, ell: usize, f: &FockTensor, q: f64) -> Result<FockTensor> {
    let n = k + ell;
    if f.degree() != n {
        return Err(Error::DegreeMismatch {
            expected: n,
            found: f.degree(),
        });
    }
    let mut out = FockTensor::zeros(f.dim(), n)?;
    for rep in coset_reps(n, k)? {
        let w = qpow(q, rep.inversions);
        if w == 0.0 {
            continue;
        }
        // Slot p receives the factor whose index is σ⁻¹(p + 1).
        let source: Vec<usize> = (1..=n)
            .map(|v| rep.permutation.iter().position(|&x| x == v).expect("permutation"))
            .collect();
        out.add_scaled(w, &f.permute_slots(&source)?)?;
    }
    Ok(out)
}

/// Applies a Wick block with precomputed kernel to a homogeneous tensor.
///
/// Returns `None` when the input has fewer than `ℓ` particles (the block
/// annihilates it).
pub fn apply_wick_kernel(
    kernel: &FockTensor,
    ell: usize,
    q: f64,
    t: &FockTensor,
) -> Result<Option<FockTensor>> {
    if t.degree() < ell {
        return Ok(None);
    }
    let annihilated = multi_annihilate(ell, q, t)?;
    Ok(Some(kernel.matmul_slots(&annihilated, ell)?))
}

/// An exact block-matrix operator on `⊕_{k ≤ N} H^{⊗k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedOperator {
    d: usize,
    cutoff: usize,
    min_shift: i64,
    max_shift: i64,
    exact_upto: Option<usize>,
    blocks: BTreeMap<(usize, usize), DMatrix<f64>>,
}

impl TruncatedOperator {
    /// Materialises a matrix-free action on every exact input sector.
    ///
    /// The action receives a basis tensor and returns its image; images must
    /// stay within the declared shift range and the cutoff.
    pub fn from_action<A>(
        d: usize,
        cutoff: usize,
        shifts: (i64, i64),
        exact_upto: Option<usize>,
        mut action: A,
    ) -> Result<Self>
    where
        A: FnMut(&FockTensor) -> Result<FockVector>,
    {
        let (min_shift, max_shift) = shifts;
        let mut blocks = BTreeMap::new();
        if let Some(top) = exact_upto {
            if top > cutoff {
                return Err(Error::InvalidArgument("exact range exceeds the cutoff".into()));
            }
            for m in 0..=top {
                let cols = checked_pow(d, m)?;
                let lo = (m as i64 + min_shift).max(0) as usize;
                let hi = m as i64 + max_shift;
                if hi < 0 {
                    continue;
                }
                let hi = hi as usize;
                if hi > cutoff {
                    return Err(Error::NotExact {
                        sector: m,
                        exact_upto,
                        cutoff,
                    });
                }
                let mut mats: Vec<DMatrix<f64>> = (lo..=hi)
                    .map(|k| Ok(DMatrix::zeros(checked_pow(d, k)?, cols)))
                    .collect::<Result<_>>()?;
                for col in 0..cols {
                    let mut e = FockTensor::zeros(d, m)?;
                    e.coeffs_mut()[col] = 1.0;
                    let image = action(&e)?;
                    for (k, t) in image.sectors().iter().enumerate() {
                        if t.max_abs() == 0.0 {
                            continue;
                        }
                        if k < lo || k > hi {
                            return Err(Error::InvalidStructure(format!(
                                "image in sector {k} outside the declared shift range"
                            )));
                        }
                        let mat = &mut mats[k - lo];
                        for (row, &v) in t.coeffs().iter().enumerate() {
                            mat[(row, col)] = v;
                        }
                    }
                }
                for (i, mat) in mats.into_iter().enumerate() {
                    blocks.insert((m, lo + i), mat);
                }
            }
        }
        Ok(Self {
            d,
            cutoff,
            min_shift,
            max_shift,
            exact_upto,
            blocks,
        })
    }

    /// The identity on `⊕_{k ≤ N}`.
    pub fn identity(d: usize, cutoff: usize) -> Result<Self> {
        Self::from_action(d, cutoff, (0, 0), Some(cutoff), |t| {
            Ok(FockVector::from_tensor(t.clone()))
        })
    }

    /// The creation operator `α†(f)`, exact on sectors `< N`.
    pub fn creation(f: &[f64], cutoff: usize) -> Result<Self> {
        let f = FockTensor::vector(f);
        let exact = cutoff.checked_sub(1);
        Self::from_action(f.dim(), cutoff, (1, 1), exact, |t| {
            Ok(FockVector::from_tensor(f.tensor(t)?))
        })
    }

    /// The annihilation operator `α_q(f)`, exact on every sector.
    pub fn annihilation(f: &[f64], q: f64, cutoff: usize) -> Result<Self> {
        let f = FockTensor::vector(f);
        Self::from_action(f.dim(), cutoff, (-1, -1), Some(cutoff), |t| {
            if t.degree() == 0 {
                Ok(FockVector::zero(f.dim()))
            } else {
                Ok(FockVector::from_tensor(annihilate(&f, q, t)?))
            }
        })
    }

    /// The field operator `ξ_q(f) = α†(f) + α_q(f)`.
    pub fn field(f: &[f64], q: f64, cutoff: usize) -> Result<Self> {
        Self::creation(f, cutoff)?.add(&Self::annihilation(f, q, cutoff)?)
    }

    /// The Wick block `W_q^{k,ℓ}(F)`, creating `k` and annihilating `ℓ` particles.
    pub fn wick_block(k: usize, ell: usize, f: &FockTensor, q: f64, cutoff: usize) -> Result<Self> {
        let kernel = wick_block_kernel(k, ell, f, q)?;
        let exact = (cutoff + ell).checked_sub(k).map(|e| e.min(cutoff));
        let shift = k as i64 - ell as i64;
        Self::from_action(f.dim(), cutoff, (shift, shift), exact, |t| {
            Ok(match apply_wick_kernel(&kernel, ell, q, t)? {
                Some(img) => FockVector::from_tensor(img),
                None => FockVector::zero(t.dim()),
            })
        })
    }

    /// Dimension of the one-particle space.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Particle-number cutoff `N`.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Largest input sector on which the operator is exact.
    pub fn exact_upto(&self) -> Option<usize> {
        self.exact_upto
    }

    /// Range of degree shifts `k′ − k` that may carry nonzero blocks.
    pub fn shift_range(&self) -> (i64, i64) {
        (self.min_shift, self.max_shift)
    }

    /// The block from input sector `from` to output sector `to`, if stored.
    pub fn block(&self, from: usize, to: usize) -> Option<&DMatrix<f64>> {
        self.blocks.get(&(from, to))
    }

    /// All stored blocks.
    pub fn blocks(&self) -> &BTreeMap<(usize, usize), DMatrix<f64>> {
        &self.blocks
    }

    /// Whether input sector `k` is exact.
    pub fn is_exact(&self, k: usize) -> bool {
        self.exact_upto.is_some_and(|e| k <= e)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        if self.cutoff != other.cutoff {
            return Err(Error::InvalidArgument(format!(
                "cutoffs differ: {} vs {}",
                self.cutoff, other.cutoff
            )));
        }
        Ok(())
    }

    /// Applies the operator to a vector supported on exact sectors.
    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        let mut out = FockVector::zero(self.d);
        for (m, t) in v.sectors().iter().enumerate() {
            if t.max_abs() == 0.0 {
                continue;
            }
            if !self.is_exact(m) {
                return Err(Error::NotExact {
                    sector: m,
                    exact_upto: self.exact_upto,
                    cutoff: self.cutoff,
                });
            }
            let x = nalgebra::DVector::from_column_slice(t.coeffs());
            for ((_, to), mat) in self.blocks.range((m, 0)..=(m, usize::MAX)) {
                let y = mat * &x;
                let img = FockTensor::from_coeffs(self.d, *to, y.as_slice().to_vec())?;
                out.add_tensor(1.0, &img)?;
            }
        }
        Ok(out)
    }

    /// Sum of two operators; exact where both are.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.linear_combination(1.0, other, 1.0)
    }

    /// `a · self + b · other`; exact where both are.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let exact_upto = match (self.exact_upto, other.exact_upto) {
            (Some(x), Some(y)) => Some(x.min(y)),
            _ => None,
        };
        let mut blocks = BTreeMap::new();
        for (src, scale) in [(self, a), (other, b)] {
            for (&(from, to), mat) in &src.blocks {
                if exact_upto.is_some_and(|e| from <= e) {
                    blocks
                        .entry((from, to))
                        .and_modify(|acc: &mut DMatrix<f64>| *acc += mat * scale)
                        .or_insert_with(|| mat * scale);
                }
            }
        }
        Ok(Self {
            d: self.d,
            cutoff: self.cutoff,
            min_shift: self.min_shift.min(other.min_shift),
            max_shift: self.max_shift.max(other.max_shift),
            exact_upto,
            blocks,
        })
    }

    /// `factor · self`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for mat in out.blocks.values_mut() {
            *mat *= factor;
        }
        out
    }

    /// The composition `self ∘ other` (apply `other` first).
    ///
    /// The result is exact on input sector `m` when `other` is exact there and
    /// `self` is exact on every sector `other` can reach from `m`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let reachable_ok = |m: usize| {
            let hi = m as i64 + other.max_shift;
            hi < 0 || self.is_exact(hi as usize)
        };
        let exact_upto = other
            .exact_upto
            .and_then(|e| (0..=e).take_while(|&m| reachable_ok(m)).last());
        let mut blocks: BTreeMap<(usize, usize), DMatrix<f64>> = BTreeMap::new();
        if let Some(e) = exact_upto {
            for (&(from, mid), inner) in other.blocks.range((0, 0)..=(e, usize::MAX)) {
                for ((_, to), outer) in self.blocks.range((mid, 0)..=(mid, usize::MAX)) {
                    let prod = outer * inner;
                    blocks
                        .entry((from, *to))
                        .and_modify(|acc| *acc += &prod)
                        .or_insert(prod);
                }
            }
        }
        Ok(Self {
            d: self.d,
            cutoff: self.cutoff,
            min_shift: self.min_shift + other.min_shift,
            max_shift: self.max_shift + other.max_shift,
            exact_upto,
            blocks,
        })
    }

    /// Largest entrywise difference on the input sectors exact for both operators.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let e = match (self.exact_upto, other.exact_upto) {
            (Some(x), Some(y)) => x.min(y),
            _ => return Ok(0.0),
        };
        let mut worst: f64 = 0.0;
        let keys: std::collections::BTreeSet<(usize, usize)> = self
            .blocks
            .keys()
            .chain(other.blocks.keys())
            .copied()
            .filter(|&(from, _)| from <= e)
            .collect();
        for key in keys {
            let diff = match (self.blocks.get(&key), other.blocks.get(&key)) {
                (Some(a), Some(b)) => (a - b).amax(),
                (Some(a), None) | (None, Some(a)) => a.amax(),
                (None, None) => 0.0,
            };
            worst = worst.max(diff);
        }
        Ok(worst)
    }
}
