//! The symbolic algebra of Wick expansions.
//!
//! An element `A = Σ_k ξ^{⋄k}(F_k)` is stored through its chaos coefficients
//! `k ↦ F_k`. Because the Wick expansion of a finite combination of field
//! products is unique, this is a normal form: products, vacuum expectations
//! and norms are all computed on the coefficients, with pairing sums carrying
//! the powers of `q`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::combinat::{
    enumerate_interblock_pairings, enumerate_pairings, IndexSet, Pairing, PartitionedSet,
};
use crate::error::{Error, Result};
use crate::fock::{apply_wick_kernel, wick_block_kernel, FockTensor, FockVector, TruncatedOperator};
use crate::qpow;

/// A finite Wick expansion `Σ_k ξ^{⋄k}(F_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WickElement {
    d: usize,
    chaos: BTreeMap<usize, FockTensor>,
}

impl WickElement {
    /// The zero element.
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            chaos: BTreeMap::new(),
        }
    }

    /// The unit `𝟙`.
    pub fn one(d: usize) -> Self {
        Self::scalar(d, 1.0)
    }

    /// `c · 𝟙`.
    pub fn scalar(d: usize, c: f64) -> Self {
        Self::from_tensor(FockTensor::scalar(d, c))
    }

    /// The pure chaos element `ξ^{⋄k}(F)`.
    pub fn from_tensor(t: FockTensor) -> Self {
        let mut a = Self::zero(t.dim());
        a.chaos.insert(t.degree(), t);
        a
    }

    /// The field `ξ(f)`.
    pub fn field(f: &[f64]) -> Self {
        Self::from_tensor(FockTensor::vector(f))
    }

    /// Dimension of the one-particle space.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// The chaos-`k` coefficient, if present.
    pub fn chaos(&self, k: usize) -> Option<&FockTensor> {
        self.chaos.get(&k)
    }

    /// All chaos coefficients.
    pub fn components(&self) -> &BTreeMap<usize, FockTensor> {
        &self.chaos
    }

    /// Chaos degrees with a nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        self.chaos
            .iter()
            .filter(|(_, t)| t.max_abs() != 0.0)
            .map(|(&k, _)| k)
            .collect()
    }

    /// Highest chaos degree present.
    pub fn max_chaos(&self) -> Option<usize> {
        self.chaos.keys().next_back().copied()
    }

    /// `self += factor · ξ^{⋄k}(t)`.
    pub fn add_tensor(&mut self, factor: f64, t: &FockTensor) -> Result<()> {
        if t.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: t.dim(),
            });
        }
        match self.chaos.get_mut(&t.degree()) {
            Some(acc) => acc.add_scaled(factor, t)?,
            None => {
                self.chaos.insert(t.degree(), t.scaled(factor));
            }
        }
        Ok(())
    }

    /// `self += factor · other`.
    pub fn add_scaled(&mut self, factor: f64, other: &WickElement) -> Result<()> {
        for t in other.chaos.values() {
            self.add_tensor(factor, t)?;
        }
        Ok(())
    }

    /// `self + other`.
    pub fn plus(&self, other: &WickElement) -> Result<WickElement> {
        let mut out = self.clone();
        out.add_scaled(1.0, other)?;
        Ok(out)
    }

    /// `self − other`.
    pub fn minus(&self, other: &WickElement) -> Result<WickElement> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    /// `factor · self`.
    pub fn scaled(&self, factor: f64) -> WickElement {
        Self {
            d: self.d,
            chaos: self
                .chaos
                .iter()
                .map(|(&k, t)| (k, t.scaled(factor)))
                .collect(),
        }
    }

    /// The part of chaos degree at most `k`.
    pub fn truncated(&self, k: usize) -> WickElement {
        Self {
            d: self.d,
            chaos: self.chaos.range(..=k).map(|(&j, t)| (j, t.clone())).collect(),
        }
    }

    /// Largest coefficient in absolute value.
    pub fn max_abs(&self) -> f64 {
        self.chaos.values().map(FockTensor::max_abs).fold(0.0, f64::max)
    }

    /// Largest coefficientwise difference to `other`.
    pub fn max_abs_diff(&self, other: &WickElement) -> f64 {
        self.minus(other).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }
}

/// The constants `D_q = 1/(1 − |q|)` and `C_q = Π_{n≥1} (1 − |q|ⁿ)^{−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormConstants {
    /// Deformation parameter.
    pub q: f64,
    /// `1/(1 − |q|)`.
    pub d_q: f64,
    /// The infinite product, truncated once a factor is within `tolerance` of one.
    pub c_q: f64,
    /// Truncation tolerance of the product.
    pub tolerance: f64,
}

impl NormConstants {
    /// Tail tolerance for the product defining `C_q`.
    pub const TOLERANCE: f64 = 1e-15;

    /// Constants for `|q| < 1`.
    pub fn new(q: f64) -> Result<Self> {
        // Written negated so that NaN is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(q.abs() < 1.0) {
            return Err(Error::NormUndefined);
        }
        let a = q.abs();
        let mut c_q = 1.0;
        let mut power = a;
        loop {
            let factor = 1.0 / (1.0 - power);
            if (1.0 - factor).abs() < Self::TOLERANCE {
                break;
            }
            c_q *= factor;
            power *= a;
        }
        Ok(Self {
            q,
            d_q: 1.0 / (1.0 - a),
            c_q,
            tolerance: Self::TOLERANCE,
        })
    }
}

/// `ξ^{⋄n}(f₁ ⊗ … ⊗ f_n)` as a Wick element.
pub fn wick_product_vectors(d: usize, fs: &[Vec<f64>]) -> Result<WickElement> {
    Ok(WickElement::from_tensor(FockTensor::product_of(d, fs)?))
}

/// A scalar multiple of a product of field operators `ξ(f_{i₁}) ⋯ ξ(f_{i_r})`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldWord {
    /// Scalar coefficient.
    pub coefficient: f64,
    /// Indices into the list of vectors, leftmost operator first.
    pub factors: Vec<usize>,
}

/// Expresses `ξ^{⋄n}(f₁ ⊗ … ⊗ f_n)` as a combination of field-operator
/// products through the recursion
/// `ξ^{⋄n}(f₁…f_n) = ξ(f₁) ξ^{⋄(n−1)}(f₂…f_n) − Σ_{i≥2} q^{i−2} ⟨f₁, f_i⟩ ξ^{⋄(n−2)}(f₂…f̂_i…f_n)`.
pub fn wick_operator_words(fs: &[Vec<f64>], q: f64) -> Vec<FieldWord> {
    fn recurse(idx: &[usize], fs: &[Vec<f64>], q: f64) -> Vec<FieldWord> {
        match idx {
            [] => vec![FieldWord {
                coefficient: 1.0,
                factors: vec![],
            }],
            [first, rest @ ..] => {
                let mut out: Vec<FieldWord> = recurse(rest, fs, q)
                    .into_iter()
                    .map(|mut w| {
                        w.factors.insert(0, *first);
                        w
                    })
                    .collect();
                for (pos, &other) in rest.iter().enumerate() {
                    let inner: f64 = fs[*first].iter().zip(&fs[other]).map(|(a, b)| a * b).sum();
                    let weight = qpow(q, pos) * inner;
                    if weight == 0.0 {
                        continue;
                    }
                    let remaining: Vec<usize> =
                        rest.iter().copied().filter(|&i| i != other).collect();
                    out.extend(recurse(&remaining, fs, q).into_iter().map(|w| FieldWord {
                        coefficient: -weight * w.coefficient,
                        factors: w.factors,
                    }));
                }
                out
            }
        }
    }
    let idx: Vec<usize> = (0..fs.len()).collect();
    recurse(&idx, fs, q)
}

/// Realises a combination of field-operator products as a truncated operator.
pub fn operator_from_field_words(
    d: usize,
    words: &[FieldWord],
    fs: &[Vec<f64>],
    q: f64,
    cutoff: usize,
) -> Result<TruncatedOperator> {
    let fields: Vec<TruncatedOperator> = fs
        .iter()
        .map(|f| TruncatedOperator::field(f, q, cutoff))
        .collect::<Result<_>>()?;
    let mut total: Option<TruncatedOperator> = None;
    for w in words {
        let mut op = TruncatedOperator::identity(d, cutoff)?;
        for &i in w.factors.iter().rev() {
            op = fields[i].compose(&op)?;
        }
        let op = op.scaled(w.coefficient);
        total = Some(match total {
            None => op,
            Some(t) => t.add(&op)?,
        });
    }
    match total {
        Some(t) => Ok(t),
        None => Ok(TruncatedOperator::identity(d, cutoff)?.scaled(0.0)),
    }
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Wick expansion of `ξ(f₁) ⋯ ξ(f_n)`: a sum over all partial pairings `π`
/// of `q^{crb(π)} Π_{(s,t)∈π} ⟨f_s, f_t⟩ ξ^{⋄}(⊗_{free} f)`.
pub fn expand_field_product(d: usize, fs: &[Vec<f64>], q: f64) -> Result<WickElement> {
    for f in fs {
        if f.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: f.len(),
            });
        }
    }
    let set = IndexSet::first_n(fs.len());
    let mut out = WickElement::zero(d);
    for pi in enumerate_pairings(&set, None) {
        let mut weight = qpow(q, pi.stats().crb);
        for &(s, t) in pi.pairs() {
            weight *= inner(&fs[s - 1], &fs[t - 1]);
        }
        if weight == 0.0 {
            continue;
        }
        let free: Vec<Vec<f64>> = pi.free().elements().iter().map(|&l| fs[l - 1].clone()).collect();
        out.add_tensor(weight, &FockTensor::product_of(d, &free)?)?;
    }
    Ok(out)
}

/// Cross pairings between a block of `n` legs and a block of `m` legs.
fn cross_pairings(n: usize, m: usize) -> Vec<Pairing> {
    enumerate_interblock_pairings(&PartitionedSet::from_sizes(1, &[n, m]))
}

/// Slot pairs contracted between two factors, each with its weight `q^crb`.
type WeightedContractions = Vec<(Vec<(usize, usize)>, f64)>;

/// The product of two Wick expansions.
///
/// For pure chaos elements `ξ^{⋄n}(F) · ξ^{⋄m}(G)` is the sum over pairings
/// `σ` joining legs of `F` to legs of `G` of `q^{crb(σ)}` times the
/// contraction of `F ⊗ G` along `σ`, placed in chaos `n + m − 2|σ|`.
pub fn multiply(a: &WickElement, b: &WickElement, q: f64) -> Result<WickElement> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch {
            expected: a.d,
            found: b.d,
        });
    }
    let mut cache: HashMap<(usize, usize), WeightedContractions> = HashMap::new();
    let mut out = WickElement::zero(a.d);
    for (&n, f) in &a.chaos {
        for (&m, g) in &b.chaos {
            let joint = f.tensor(g)?;
            let terms = cache.entry((n, m)).or_insert_with(|| {
                cross_pairings(n, m)
                    .into_iter()
                    .map(|sigma| {
                        let slots = sigma.pairs().iter().map(|&(s, t)| (s - 1, t - 1)).collect();
                        (slots, qpow(q, sigma.stats().crb))
                    })
                    .collect()
            });
            for (slots, weight) in terms.iter() {
                if *weight == 0.0 {
                    continue;
                }
                out.add_tensor(*weight, &joint.contract_slots(slots)?)?;
            }
        }
    }
    Ok(out)
}

/// Product of a sequence of elements, left to right; the unit for an empty list.
pub fn multiply_all(d: usize, factors: &[WickElement], q: f64) -> Result<WickElement> {
    factors
        .iter()
        .try_fold(WickElement::one(d), |acc, x| multiply(&acc, x, q))
}

/// `ω_q(ξ(f₁) ⋯ ξ(f_n)) = Σ_{perfect π} q^{cr(π)} Π ⟨f_s, f_t⟩`.
pub fn moment(vectors: &[Vec<f64>], q: f64) -> Result<f64> {
    let d = vectors.first().map_or(0, Vec::len);
    if let Some(v) = vectors.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: v.len(),
        });
    }
    let gram: Vec<Vec<f64>> = vectors
        .iter()
        .map(|a| vectors.iter().map(|b| inner(a, b)).collect())
        .collect();
    let word: Vec<usize> = (0..vectors.len()).collect();
    moment_from_gram(&gram, &word, q)
}

/// The vacuum moment of `ξ(e_{w₁}) ⋯ ξ(e_{w_n})` for vectors with Gram matrix `gram`.
pub fn moment_from_gram(gram: &[Vec<f64>], word: &[usize], q: f64) -> Result<f64> {
    let n = gram.len();
    if gram.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("Gram matrix must be square".into()));
    }
    if let Some(&w) = word.iter().find(|&&w| w >= n) {
        return Err(Error::InvalidArgument(format!("letter {w} outside the Gram matrix")));
    }
    if word.len() % 2 == 1 {
        return Ok(0.0);
    }
    let set = IndexSet::first_n(word.len());
    Ok(enumerate_pairings(&set, Some(word.len() / 2))
        .iter()
        .map(|pi| {
            pi.pairs()
                .iter()
                .map(|&(s, t)| gram[word[s - 1]][word[t - 1]])
                .product::<f64>()
                * qpow(q, pi.stats().cr)
        })
        .sum())
}

/// The vacuum state: the chaos-0 coefficient.
pub fn vacuum_expectation(a: &WickElement) -> f64 {
    a.chaos(0).map_or(0.0, |t| t.coeffs()[0])
}

/// `Δ_q`: scales the chaos-`k` coefficient by `q^k`.
pub fn delta_q(a: &WickElement, q: f64) -> WickElement {
    WickElement {
        d: a.d,
        chaos: a
            .chaos
            .iter()
            .map(|(&k, t)| (k, t.scaled(qpow(q, k))))
            .collect(),
    }
}

/// The graded norm `Σ_k (k+1) C_q^{3/2} D_q^k ‖F_k‖`.
pub fn triple_norm(a: &WickElement, q: f64) -> Result<f64> {
    let c = NormConstants::new(q)?;
    Ok(a.chaos
        .iter()
        .map(|(&k, t)| (k as f64 + 1.0) * c.c_q.powf(1.5) * c.d_q.powi(k as i32) * t.norm())
        .sum())
}

/// Realises a Wick expansion as an operator through its Wick blocks,
/// `ξ^{⋄n}(F) = Σ_{k=0}^{n} W^{n−k,k}(F)`.
///
/// The operator is exact on input sectors `m ≤ N − (highest chaos)`.
pub fn to_operator(a: &WickElement, q: f64, cutoff: usize) -> Result<TruncatedOperator> {
    let top = a.max_chaos().unwrap_or(0);
    if cutoff < top {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff} is below the chaos degree {top}"
        )));
    }
    to_operator_upto(a, q, cutoff, cutoff - top)
}

/// Like [`to_operator`], but materialises only the input sectors `m ≤ exact_upto`.
///
/// Useful when only low sectors are compared, since the dense blocks of the
/// higher sectors dominate the cost.
pub fn to_operator_upto(
    a: &WickElement,
    q: f64,
    cutoff: usize,
    exact_upto: usize,
) -> Result<TruncatedOperator> {
    let top = a.max_chaos().unwrap_or(0);
    if exact_upto + top > cutoff {
        return Err(Error::NotExact {
            sector: exact_upto,
            exact_upto: cutoff.checked_sub(top),
            cutoff,
        });
    }
    let mut kernels = Vec::new();
    for (&n, f) in &a.chaos {
        for ell in 0..=n {
            kernels.push((ell, wick_block_kernel(n - ell, ell, f, q)?));
        }
    }
    let d = a.d;
    TruncatedOperator::from_action(
        d,
        cutoff,
        (-(top as i64), top as i64),
        Some(exact_upto),
        |t| {
            let mut out = FockVector::zero(d);
            for (ell, kernel) in &kernels {
                if let Some(img) = apply_wick_kernel(kernel, *ell, q, t)? {
                    out.add_tensor(1.0, &img)?;
                }
            }
            Ok(out)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_fourth_moment() {
        for q in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let e = vec![1.0];
            let m = moment(&[e.clone(), e.clone(), e.clone(), e], q).unwrap();
            assert_abs_diff_eq!(m, 2.0 + q, epsilon = 1e-15);
        }
    }

    #[test]
    fn odd_and_sixth_moments() {
        let e = vec![1.0];
        assert_eq!(moment(&vec![e.clone(); 3], 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(moment(&vec![e; 6], 1.0).unwrap(), 15.0);
    }

    #[test]
    fn two_field_product() {
        let f = vec![1.0, 2.0];
        let g = vec![3.0, -1.0];
        let p = multiply(&WickElement::field(&f), &WickElement::field(&g), 0.4).unwrap();
        assert_eq!(vacuum_expectation(&p), 1.0);
        assert_eq!(
            p.chaos(2).unwrap(),
            &FockTensor::product_of(2, &[f.clone(), g.clone()]).unwrap()
        );
        assert_eq!(p, expand_field_product(2, &[f, g], 0.4).unwrap());
    }

    #[test]
    fn square_of_second_chaos() {
        let q = 0.3;
        let ee = WickElement::from_tensor(FockTensor::product_of(1, &[vec![1.0], vec![1.0]]).unwrap());
        let sq = multiply(&ee, &ee, q).unwrap();
        assert_abs_diff_eq!(sq.chaos(4).unwrap().coeffs()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sq.chaos(2).unwrap().coeffs()[0], (1.0 + q).powi(2), epsilon = 1e-15);
        assert_abs_diff_eq!(sq.chaos(0).unwrap().coeffs()[0], 1.0 + q, epsilon = 1e-15);
    }

    #[test]
    fn three_field_expansion() {
        let q = 0.7;
        let fs = vec![vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.8, 0.1]];
        let a = expand_field_product(2, &fs, q).unwrap();
        let mut expected = WickElement::from_tensor(FockTensor::product_of(2, &fs).unwrap());
        expected.add_tensor(inner(&fs[0], &fs[1]), &FockTensor::vector(&fs[2])).unwrap();
        expected.add_tensor(q * inner(&fs[0], &fs[2]), &FockTensor::vector(&fs[1])).unwrap();
        expected.add_tensor(inner(&fs[1], &fs[2]), &FockTensor::vector(&fs[0])).unwrap();
        assert!(a.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn delta_scales_by_degree() {
        let q = 0.5;
        let mut a = WickElement::one(1);
        a.add_tensor(2.0, &FockTensor::product_of(1, &[vec![1.0], vec![1.0]]).unwrap()).unwrap();
        let b = delta_q(&a, q);
        assert_eq!(vacuum_expectation(&b), 1.0);
        assert_abs_diff_eq!(b.chaos(2).unwrap().coeffs()[0], 0.5);
        let c = delta_q(&a, 0.0);
        assert_eq!(c.chaos(2).unwrap().max_abs(), 0.0);
        assert_eq!(vacuum_expectation(&c), 1.0);
    }

    #[test]
    fn norm_constants() {
        let c = NormConstants::new(0.5).unwrap();
        assert_abs_diff_eq!(c.c_q, 3.462746619455, epsilon = 1e-11);
        assert_abs_diff_eq!(c.d_q, 2.0);
        let c0 = NormConstants::new(0.0).unwrap();
        assert_eq!((c0.c_q, c0.d_q), (1.0, 1.0));
        assert_eq!(NormConstants::new(1.0), Err(Error::NormUndefined));
        assert_eq!(NormConstants::new(-1.0), Err(Error::NormUndefined));
    }

    #[test]
    fn triple_norm_of_pure_chaos() {
        let f = FockTensor::product_of(2, &[vec![3.0, 4.0], vec![1.0, 0.0]]).unwrap();
        let a = WickElement::from_tensor(f);
        assert_abs_diff_eq!(triple_norm(&a, 0.0).unwrap(), 3.0 * 5.0, epsilon = 1e-12);
        let c = NormConstants::new(0.5).unwrap();
        assert_abs_diff_eq!(
            triple_norm(&WickElement::one(1), 0.5).unwrap(),
            c.c_q.powf(1.5),
            epsilon = 1e-12
        );
        assert_eq!(triple_norm(&a, -1.0), Err(Error::NormUndefined));
    }

    #[test]
    fn operator_words_for_two_fields() {
        let fs = vec![vec![1.0, 2.0], vec![0.5, -1.0]];
        let words = wick_operator_words(&fs, 0.3);
        assert_eq!(words.len(), 2);
        assert_eq!(words[0].factors, vec![0, 1]);
        assert_eq!(words[1].factors, Vec::<usize>::new());
        assert_abs_diff_eq!(words[1].coefficient, -inner(&fs[0], &fs[1]));
    }

    #[test]
    fn operator_applied_to_vacuum_returns_coefficients() {
        let f = FockTensor::product_of(2, &[vec![1.0, -2.0], vec![0.5, 0.25]]).unwrap();
        let op = to_operator(&WickElement::from_tensor(f.clone()), 0.6, 4).unwrap();
        let out = op.apply(&FockVector::vacuum(2)).unwrap();
        assert_eq!(out.sector(2).unwrap(), &f);
    }
}
