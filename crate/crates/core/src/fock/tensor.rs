//! Homogeneous tensors `F ∈ H^{⊗k}` over a real basis of dimension `d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A degree-`k` tensor over a `d`-dimensional real basis.
///
/// Coefficients are stored densely in row-major word order: the word
/// `(w₁, …, w_k)` sits at index `Σ wᵢ d^{k−i}`, so the first letter is the
/// most significant digit. The degree-0 tensor is a single scalar (a multiple
/// of the vacuum).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "TensorJson", try_from = "TensorJson")]
pub struct FockTensor {
    d: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

/// Sparse word/value JSON form of a tensor.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct TensorJson {
    d: usize,
    degree: usize,
    coeffs: Vec<WordValue>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct WordValue {
    word: Vec<usize>,
    value: f64,
}

impl From<FockTensor> for TensorJson {
    fn from(t: FockTensor) -> Self {
        let coeffs = t
            .entries()
            .filter(|(_, v)| *v != 0.0)
            .map(|(word, value)| WordValue { word, value })
            .collect();
        TensorJson {
            d: t.d,
            degree: t.degree,
            coeffs,
        }
    }
}

impl TryFrom<TensorJson> for FockTensor {
    type Error = Error;

    fn try_from(j: TensorJson) -> Result<Self> {
        let mut t = FockTensor::zeros(j.d, j.degree)?;
        for WordValue { word, value } in j.coeffs {
            let idx = t.index_of(&word)?;
            t.coeffs[idx] += value;
        }
        Ok(t)
    }
}

/// Largest number of coefficients a single tensor may hold.
const MAX_LEN: usize = 1 << 26;

/// `d^k`, guarded against absurd sizes.
pub(crate) fn checked_pow(d: usize, k: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..k {
        n = n
            .checked_mul(d)
            .filter(|&n| n <= MAX_LEN)
            .ok_or_else(|| Error::InvalidArgument(format!("tensor of size {d}^{k} is too large")))?;
    }
    Ok(n)
}

impl FockTensor {
    /// The zero tensor of degree `degree`.
    pub fn zeros(d: usize, degree: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            d,
            degree,
            coeffs: vec![0.0; checked_pow(d, degree)?],
        })
    }

    /// A degree-0 tensor (multiple of the vacuum).
    pub fn scalar(d: usize, value: f64) -> Self {
        Self {
            d,
            degree: 0,
            coeffs: vec![value],
        }
    }

    /// A degree-1 tensor with the given coordinates.
    pub fn vector(coords: &[f64]) -> Self {
        Self {
            d: coords.len(),
            degree: 1,
            coeffs: coords.to_vec(),
        }
    }

    /// Builds a tensor from raw row-major coefficients.
    pub fn from_coeffs(d: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let len = checked_pow(d, degree)?;
        if coeffs.len() != len {
            return Err(Error::InvalidArgument(format!(
                "expected {len} coefficients, found {}",
                coeffs.len()
            )));
        }
        Ok(Self { d, degree, coeffs })
    }

    /// The basis tensor `e_{w₁} ⊗ … ⊗ e_{w_k}`.
    pub fn basis(d: usize, word: &[usize]) -> Result<Self> {
        let mut t = Self::zeros(d, word.len())?;
        let idx = t.index_of(word)?;
        t.coeffs[idx] = 1.0;
        Ok(t)
    }

    /// `f₁ ⊗ … ⊗ f_k` for vectors of a common dimension.
    pub fn product_of(d: usize, factors: &[Vec<f64>]) -> Result<Self> {
        let mut t = Self::scalar(d, 1.0);
        for f in factors {
            if f.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: f.len(),
                });
            }
            t = t.tensor(&Self::vector(f))?;
        }
        Ok(t)
    }

    /// Dimension of the one-particle space.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Tensor degree (particle number).
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Row-major coefficients.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Mutable row-major coefficients.
    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Flat index of a word.
    pub fn index_of(&self, word: &[usize]) -> Result<usize> {
        if word.len() != self.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: word.len(),
            });
        }
        let mut idx = 0;
        for &w in word {
            if w >= self.d {
                return Err(Error::InvalidArgument(format!(
                    "letter {w} out of range for dimension {}",
                    self.d
                )));
            }
            idx = idx * self.d + w;
        }
        Ok(idx)
    }

    /// Word at a flat index.
    pub fn word_of(&self, mut idx: usize) -> Vec<usize> {
        let mut word = vec![0; self.degree];
        for slot in word.iter_mut().rev() {
            *slot = idx % self.d;
            idx /= self.d;
        }
        word
    }

    /// Coefficient of a word.
    pub fn get(&self, word: &[usize]) -> Result<f64> {
        Ok(self.coeffs[self.index_of(word)?])
    }

    /// All `(word, coefficient)` pairs in word order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.word_of(i), v))
    }

    /// The degree-0 coefficient; errors for positive degree.
    pub fn as_scalar(&self) -> Result<f64> {
        if self.degree != 0 {
            return Err(Error::DegreeMismatch {
                expected: 0,
                found: self.degree,
            });
        }
        Ok(self.coeffs[0])
    }

    /// Euclidean (`F₀`) norm.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(())
    }

    /// Euclidean (`F₀`) inner product; zero between different degrees.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        if self.degree != other.degree {
            return Ok(0.0);
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// `self += factor · other`.
    pub fn add_scaled(&mut self, factor: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        if factor != 0.0 {
            for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
                *a += factor * b;
            }
        }
        Ok(())
    }

    /// `factor · self`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            d: self.d,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| factor * c).collect(),
        }
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        checked_pow(self.d, self.degree + other.degree)?;
        let mut coeffs = Vec::with_capacity(self.coeffs.len() * other.coeffs.len());
        for &a in &self.coeffs {
            coeffs.extend(other.coeffs.iter().map(|b| a * b));
        }
        Ok(Self {
            d: self.d,
            degree: self.degree + other.degree,
            coeffs,
        })
    }

    /// Rearranges tensor slots: slot `i` of the result is slot `source[i]` of `self`.
    ///
    /// For a product tensor `f₁ ⊗ … ⊗ f_k` this returns
    /// `f_{source[0]+1} ⊗ … ⊗ f_{source[k−1]+1}`.
    pub fn permute_slots(&self, source: &[usize]) -> Result<Self> {
        if source.len() != self.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: source.len(),
            });
        }
        let strides = self.strides();
        let src_strides: Vec<usize> = source.iter().map(|&s| strides[s]).collect();
        let mut out = vec![0.0; self.coeffs.len()];
        for_each_offset(self.d, &src_strides, |dst, src| out[dst] = self.coeffs[src]);
        Ok(Self {
            d: self.d,
            degree: self.degree,
            coeffs: out,
        })
    }

    /// Contracts the listed slot pairs (zero-based) with the Euclidean pairing.
    ///
    /// The surviving slots keep their relative order.
    pub fn contract_slots(&self, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut used = vec![false; self.degree];
        for &(a, b) in pairs {
            for s in [a, b] {
                if s >= self.degree || used[s] {
                    return Err(Error::InvalidStructure(format!(
                        "invalid contraction slot {s} for degree {}",
                        self.degree
                    )));
                }
                used[s] = true;
            }
        }
        let strides = self.strides();
        let free: Vec<usize> = (0..self.degree).filter(|&s| !used[s]).map(|s| strides[s]).collect();
        let inner: Vec<usize> = pairs.iter().map(|&(a, b)| strides[a] + strides[b]).collect();
        let mut out = Self::zeros(self.d, free.len())?;
        let inner_offsets = offsets(self.d, &inner);
        for_each_offset(self.d, &free, |dst, base| {
            out.coeffs[dst] = inner_offsets.iter().map(|&o| self.coeffs[base + o]).sum();
        });
        Ok(out)
    }

    /// Contracts slots of `self` against slots of `other`, keeping the free
    /// slots of `self` followed by those of `other`.
    pub fn contract_with(&self, other: &Self, pairs: &[(usize, usize)]) -> Result<Self> {
        let joint = self.tensor(other)?;
        let shifted: Vec<(usize, usize)> = pairs
            .iter()
            .map(|&(a, b)| (a, self.degree + b))
            .collect();
        joint.contract_slots(&shifted)
    }

    /// Reads `self` (degree `a + b`) as a `d^a × d^b` matrix and `other`
    /// (degree `b + c`) as a `d^b × d^c` matrix and returns their product,
    /// a tensor of degree `a + c`.
    pub fn matmul_slots(&self, other: &Self, b: usize) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        if b > self.degree || b > other.degree {
            return Err(Error::InvalidArgument("shared slot count too large".into()));
        }
        let a = self.degree - b;
        let c = other.degree - b;
        let (rows, inner, cols) = (
            checked_pow(self.d, a)?,
            checked_pow(self.d, b)?,
            checked_pow(self.d, c)?,
        );
        let mut out = Self::zeros(self.d, a + c)?;
        for r in 0..rows {
            let lhs = &self.coeffs[r * inner..(r + 1) * inner];
            let dst = &mut out.coeffs[r * cols..(r + 1) * cols];
            for (k, &x) in lhs.iter().enumerate() {
                if x != 0.0 {
                    let rhs = &other.coeffs[k * cols..(k + 1) * cols];
                    for (o, y) in dst.iter_mut().zip(rhs) {
                        *o += x * y;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Stride of each slot in the flat layout.
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.degree];
        for i in (0..self.degree.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.d;
        }
        strides
    }
}

/// Calls `f(dst, src)` for every multi-index over `strides.len()` slots of
/// size `d`, where `dst` enumerates the multi-index in row-major order and
/// `src = Σ xᵢ · strides[i]`.
fn for_each_offset(d: usize, strides: &[usize], mut f: impl FnMut(usize, usize)) {
    let k = strides.len();
    let mut digits = vec![0usize; k];
    let mut src = 0usize;
    let total = d.pow(k as u32);
    for dst in 0..total {
        f(dst, src);
        // Odometer increment on the last slot first.
        for i in (0..k).rev() {
            digits[i] += 1;
            src += strides[i];
            if digits[i] < d {
                break;
            }
            src -= d * strides[i];
            digits[i] = 0;
        }
    }
}

/// All offsets `Σ xᵢ · strides[i]` in row-major order.
fn offsets(d: usize, strides: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(d.pow(strides.len() as u32));
    for_each_offset(d, strides, |_, src| out.push(src));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_indexing_round_trips() {
        let t = FockTensor::zeros(3, 4).unwrap();
        for i in 0..t.coeffs().len() {
            assert_eq!(t.index_of(&t.word_of(i)).unwrap(), i);
        }
    }

    #[test]
    fn permutation_moves_product_factors() {
        let f = vec![vec![1.0, 2.0], vec![3.0, 5.0], vec![7.0, 11.0]];
        let t = FockTensor::product_of(2, &f).unwrap();
        let p = t.permute_slots(&[2, 0, 1]).unwrap();
        let expected =
            FockTensor::product_of(2, &[f[2].clone(), f[0].clone(), f[1].clone()]).unwrap();
        assert_eq!(p, expected);
    }

    #[test]
    fn contraction_of_product_tensor() {
        let f = vec![vec![1.0, 2.0], vec![3.0, 5.0], vec![7.0, 11.0]];
        let t = FockTensor::product_of(2, &f).unwrap();
        // ⟨f₁, f₃⟩ f₂
        let c = t.contract_slots(&[(0, 2)]).unwrap();
        let inner = 1.0 * 7.0 + 2.0 * 11.0;
        assert_eq!(c, FockTensor::vector(&f[1]).scaled(inner));
    }

    #[test]
    fn matmul_slots_contracts_the_middle() {
        let f = FockTensor::vector(&[1.0, 2.0]);
        let g = FockTensor::vector(&[3.0, 4.0]);
        let fg = f.tensor(&g).unwrap();
        let h = FockTensor::vector(&[5.0, 6.0]);
        let gh = g.tensor(&h).unwrap();
        let out = fg.matmul_slots(&gh, 1).unwrap();
        let gg = 9.0 + 16.0;
        assert_eq!(out, f.tensor(&h).unwrap().scaled(gg));
    }

    #[test]
    fn json_round_trip_is_sparse() {
        let t = FockTensor::basis(3, &[2, 0]).unwrap().scaled(1.5);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(
            s,
            r#"{"d":3,"degree":2,"coeffs":[{"word":[2,0],"value":1.5}]}"#
        );
        let back: FockTensor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
