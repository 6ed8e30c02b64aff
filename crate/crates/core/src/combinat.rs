//! Pair contractions, permutation cosets and their q-weight statistics.
//!
//! Every Wick-type expansion in this crate is a sum over partial pairings of
//! an ordered label set, weighted by `q` raised to a crossing-type statistic.
//! This module owns those objects:
//!
//! * [`IndexSet`] – a strictly increasing list of labels,
//! * [`Pairing`] – disjoint `(s, t)` pairs with `s < t` inside a context,
//! * [`PartitionedSet`] – an ordered set split into consecutive blocks,
//! * [`CosetRep`] – minimal-inversion representatives of shuffle cosets.
//!
//! Labels are arbitrary naturals, so a sub-pairing keeps the labels of its
//! parent and statistics can be evaluated in any ambient context.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A label of an ordered index set.
pub type Label = usize;

/// A totally ordered finite set of labels, stored strictly increasing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexSet {
    elements: Vec<Label>,
}

impl IndexSet {
    /// Builds an index set, rejecting unsorted or repeated labels.
    pub fn new(elements: Vec<Label>) -> Result<Self> {
        if elements.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStructure(format!(
                "labels must be strictly increasing: {elements:?}"
            )));
        }
        Ok(Self { elements })
    }

    /// Builds an index set from arbitrary labels by sorting and deduplicating.
    pub fn from_unsorted(mut elements: Vec<Label>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        Self { elements }
    }

    /// The consecutive labels `first, first + 1, …, first + len − 1`.
    pub fn interval(first: Label, len: usize) -> Self {
        Self {
            elements: (first..first + len).collect(),
        }
    }

    /// The set `{1, …, n}`.
    pub fn first_n(n: usize) -> Self {
        Self::interval(1, n)
    }

    /// The labels in increasing order.
    pub fn elements(&self) -> &[Label] {
        &self.elements
    }

    /// Number of labels.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    /// Whether the set has no labels.
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Whether `label` belongs to the set.
    pub fn contains(&self, label: Label) -> bool {
        self.elements.binary_search(&label).is_ok()
    }

    /// Zero-based rank of `label` within the set.
    pub fn position(&self, label: Label) -> Option<usize> {
        self.elements.binary_search(&label).ok()
    }

    /// The set with the given labels removed.
    pub fn without(&self, removed: &[Label]) -> Self {
        Self {
            elements: self
                .elements
                .iter()
                .copied()
                .filter(|l| !removed.contains(l))
                .collect(),
        }
    }
}

/// Crossing, separation and intertwining numbers of a pairing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionStats {
    /// Number of crossing arc pairs.
    pub cr: usize,
    /// Number of (arc, uncontracted label) incidences with the label inside the arc.
    pub sp: usize,
    /// `cr + sp`, the exponent of `q` attached to the contraction.
    pub crb: usize,
}

/// A set of disjoint pairs `(s, t)`, `s < t`, inside a context index set.
///
/// Pairs are kept sorted by their first label, so two pairings over the same
/// context are equal as sets exactly when they are equal as values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pairing {
    pairs: Vec<(Label, Label)>,
    context: IndexSet,
}

impl Pairing {
    /// Builds a pairing; pairs are oriented and sorted into canonical form.
    pub fn new(pairs: Vec<(Label, Label)>, context: IndexSet) -> Result<Self> {
        let mut pairs: Vec<(Label, Label)> = pairs
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        pairs.sort_unstable();
        let mut seen = Vec::with_capacity(2 * pairs.len());
        for &(s, t) in &pairs {
            if s == t {
                return Err(Error::InvalidStructure(format!("degenerate pair ({s}, {t})")));
            }
            for l in [s, t] {
                if !context.contains(l) {
                    return Err(Error::InvalidStructure(format!(
                        "label {l} is not in the context"
                    )));
                }
                if seen.contains(&l) {
                    return Err(Error::InvalidStructure(format!("label {l} used twice")));
                }
                seen.push(l);
            }
        }
        Ok(Self { pairs, context })
    }

    /// The empty pairing over `context`.
    pub fn empty(context: IndexSet) -> Self {
        Self {
            pairs: Vec::new(),
            context,
        }
    }

    /// The pairs in canonical order.
    pub fn pairs(&self) -> &[(Label, Label)] {
        &self.pairs
    }

    /// The ambient ordered set.
    pub fn context(&self) -> &IndexSet {
        &self.context
    }

    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// Whether there are no pairs.
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// All contracted labels, increasing.
    pub fn legs(&self) -> Vec<Label> {
        let mut legs: Vec<Label> = self.pairs.iter().flat_map(|&(s, t)| [s, t]).collect();
        legs.sort_unstable();
        legs
    }

    /// The uncontracted labels of the context.
    pub fn free(&self) -> IndexSet {
        self.context.without(&self.legs())
    }

    /// Whether the two pairings share no label.
    pub fn is_disjoint(&self, other: &Pairing) -> bool {
        let legs = self.legs();
        other.legs().iter().all(|l| legs.binary_search(l).is_err())
    }

    /// Union of two disjoint pairings, placed in this pairing's context.
    pub fn union(&self, other: &Pairing) -> Result<Pairing> {
        if !self.is_disjoint(other) {
            return Err(Error::PairingsNotDisjoint);
        }
        let mut pairs = self.pairs.clone();
        pairs.extend_from_slice(&other.pairs);
        Pairing::new(pairs, self.context.clone())
    }

    /// The same pairs placed in a different context.
    pub fn with_context(&self, context: IndexSet) -> Result<Pairing> {
        Pairing::new(self.pairs.clone(), context)
    }

    /// Crossing, separation and intertwining numbers.
    pub fn stats(&self) -> ContractionStats {
        contraction_stats(self)
    }
}

/// Number of pairs of arcs `(i, j), (k, l)` with `i < k < j < l`.
pub fn crossing_number(pairs: &[(Label, Label)]) -> usize {
    let mut count = 0;
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for &(k, l) in &pairs[a + 1..] {
            if (i < k && k < j && j < l) || (k < i && i < l && l < j) {
                count += 1;
            }
        }
    }
    count
}

/// Crossing number, separation number and their sum for a pairing.
///
/// The separation number counts, for every arc, the uncontracted labels of the
/// context lying strictly between its endpoints.
pub fn contraction_stats(pairing: &Pairing) -> ContractionStats {
    let cr = crossing_number(&pairing.pairs);
    let free = pairing.free();
    let sp = pairing
        .pairs
        .iter()
        .map(|&(s, t)| free.elements().iter().filter(|&&x| s < x && x < t).count())
        .sum();
    ContractionStats { cr, sp, crb: cr + sp }
}

/// The intertwining number of `pi` relative to an already performed contraction `sigma`.
///
/// The result is `crb(pi ∪ sigma) − crb(sigma)`, where the first term is
/// evaluated in the full context and the second in the context left after the
/// legs of `pi` have been removed. This convention makes the weight of a
/// contraction performed in two stages equal to the weight of performing it
/// in one go.
pub fn relative_intertwining(pi: &Pairing, sigma: &Pairing) -> Result<i64> {
    if pi.context != sigma.context {
        return Err(Error::InvalidStructure(
            "pairings live in different contexts".into(),
        ));
    }
    let joint = pi.union(sigma)?;
    let reduced = sigma.with_context(pi.context.without(&pi.legs()))?;
    Ok(joint.stats().crb as i64 - reduced.stats().crb as i64)
}

/// Enumerates all partial pairings of `elements` whose pairs satisfy `allowed`.
///
/// With `size = Some(k)` only pairings with exactly `k` pairs are produced.
/// Results are in lexicographic order of their canonical pair lists.
fn enumerate_with<F>(elements: &[Label], size: Option<usize>, allowed: F) -> Vec<Vec<(Label, Label)>>
where
    F: Fn(Label, Label) -> bool,
{
    fn recurse<F: Fn(Label, Label) -> bool>(
        elements: &[Label],
        used: &mut [bool],
        start: usize,
        size: Option<usize>,
        current: &mut Vec<(Label, Label)>,
        allowed: &F,
        out: &mut Vec<Vec<(Label, Label)>>,
    ) {
        if let Some(k) = size {
            let remaining = used[start..].iter().filter(|u| !**u).count();
            if current.len() + remaining / 2 < k {
                return;
            }
            if current.len() == k {
                out.push(current.clone());
                return;
            }
        }
        let Some(i) = (start..elements.len()).find(|&i| !used[i]) else {
            if size.is_none() {
                out.push(current.clone());
            }
            return;
        };
        // Leave element `i` uncontracted.
        used[i] = true;
        recurse(elements, used, i + 1, size, current, allowed, out);
        // Or pair it with a later unused element.
        for j in i + 1..elements.len() {
            if !used[j] && allowed(elements[i], elements[j]) {
                used[j] = true;
                current.push((elements[i], elements[j]));
                recurse(elements, used, i + 1, size, current, allowed, out);
                current.pop();
                used[j] = false;
            }
        }
        used[i] = false;
    }

    let mut out = Vec::new();
    let mut used = vec![false; elements.len()];
    recurse(elements, &mut used, 0, size, &mut Vec::new(), &allowed, &mut out);
    for p in &mut out {
        p.sort_unstable();
    }
    out.sort();
    out
}

fn into_pairings(raw: Vec<Vec<(Label, Label)>>, context: &IndexSet) -> Vec<Pairing> {
    raw.into_iter()
        .map(|pairs| Pairing {
            pairs,
            context: context.clone(),
        })
        .collect()
}

/// All pairings of `set` with exactly `k` pairs, or all partial pairings when `k` is `None`.
pub fn enumerate_pairings(set: &IndexSet, k: Option<usize>) -> Vec<Pairing> {
    into_pairings(enumerate_with(set.elements(), k, |_, _| true), set)
}

/// An ordered set split into consecutive, possibly empty, blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionedSet {
    blocks: Vec<IndexSet>,
    total: IndexSet,
}

impl PartitionedSet {
    /// Builds a partitioned set; each block must lie entirely after the previous ones.
    pub fn new(blocks: Vec<IndexSet>) -> Result<Self> {
        let total: Vec<Label> = blocks.iter().flat_map(|b| b.elements().iter().copied()).collect();
        let total = IndexSet::new(total).map_err(|_| {
            Error::InvalidStructure("blocks must be consecutive and disjoint".into())
        })?;
        Ok(Self { blocks, total })
    }

    /// Consecutive blocks of the given sizes with labels starting at `first`.
    pub fn from_sizes(first: Label, sizes: &[usize]) -> Self {
        let mut next = first;
        let blocks = sizes
            .iter()
            .map(|&len| {
                let b = IndexSet::interval(next, len);
                next += len;
                b
            })
            .collect();
        Self::new(blocks).expect("intervals are consecutive")
    }

    /// The blocks in order.
    pub fn blocks(&self) -> &[IndexSet] {
        &self.blocks
    }

    /// The union of all blocks.
    pub fn total(&self) -> &IndexSet {
        &self.total
    }

    /// Index of the block containing `label`.
    pub fn block_of(&self, label: Label) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(label))
    }
}

/// All pairings of the total set in which no pair lies inside a single block.
pub fn enumerate_interblock_pairings(set: &PartitionedSet) -> Vec<Pairing> {
    let raw = enumerate_with(set.total().elements(), None, |a, b| {
        set.block_of(a) != set.block_of(b)
    });
    into_pairings(raw, set.total())
}

/// The interleaving `I₁, J₁, I₂, …, J_{n−1}, I_n` of two partitioned sets.
///
/// The labels must already respect the interleaved order.
pub fn interleave(legs: &PartitionedSet, inserts: &PartitionedSet) -> Result<PartitionedSet> {
    let n = legs.blocks().len();
    if n == 0 || inserts.blocks().len() + 1 != n {
        return Err(Error::InvalidStructure(format!(
            "{} leg blocks cannot be interleaved with {} insertion blocks",
            n,
            inserts.blocks().len()
        )));
    }
    let mut blocks = Vec::with_capacity(2 * n - 1);
    for (i, b) in legs.blocks().iter().enumerate() {
        blocks.push(b.clone());
        if let Some(j) = inserts.blocks().get(i) {
            blocks.push(j.clone());
        }
    }
    PartitionedSet::new(blocks)
        .map_err(|_| Error::InvalidStructure("labels do not respect the interleaved order".into()))
}

/// Inter-block pairings of the interleaving `I ≀ J` that never pair two labels of `I`.
pub fn enumerate_restricted_pairings(
    legs: &PartitionedSet,
    inserts: &PartitionedSet,
) -> Result<Vec<Pairing>> {
    let woven = interleave(legs, inserts)?;
    let raw = enumerate_with(woven.total().elements(), None, |a, b| {
        woven.block_of(a) != woven.block_of(b)
            && !(legs.total().contains(a) && legs.total().contains(b))
    });
    Ok(into_pairings(raw, woven.total()))
}

/// Number of inversions of a permutation in one-line notation.
pub fn inversions(perm: &[usize]) -> usize {
    let mut count = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[j] < perm[i] {
                count += 1;
            }
        }
    }
    count
}

/// All permutations of `0..n` in lexicographic order, paired with their inversion counts.
pub fn permutations_with_inversions(n: usize) -> Vec<(Vec<usize>, usize)> {
    use itertools::Itertools;
    (0..n)
        .permutations(n)
        .map(|p| {
            let inv = inversions(&p);
            (p, inv)
        })
        .collect()
}

/// A minimal-inversion representative of a coset of `S_k × S_{n−k}` in `S_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetRep {
    /// One-line notation with values `1..=n`.
    pub permutation: Vec<usize>,
    /// Number of inversions of `permutation`.
    pub inversions: usize,
}

impl CosetRep {
    /// Zero-based positions at which the values `1..=k` occur, increasing.
    pub fn low_positions(&self, k: usize) -> Vec<usize> {
        let mut pos: Vec<usize> = (0..self.permutation.len())
            .filter(|&p| self.permutation[p] <= k)
            .collect();
        pos.sort_unstable();
        pos
    }
}

/// Representatives of `S_n / (S_k × S_{n−k})` with minimal inversion number.
///
/// Relabelling values inside `{1..k}` or inside `{k+1..n}` stays within a
/// class, so the minimal representative lists each of those value groups in
/// increasing order. The result has `C(n, k)` entries in lexicographic order.
pub fn coset_reps(n: usize, k: usize) -> Result<Vec<CosetRep>> {
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    use itertools::Itertools;
    let mut reps: Vec<CosetRep> = (0..n)
        .combinations(k)
        .map(|low| {
            let mut permutation = vec![0; n];
            let (mut next_low, mut next_high) = (1, k + 1);
            for (p, slot) in permutation.iter_mut().enumerate() {
                if low.contains(&p) {
                    *slot = next_low;
                    next_low += 1;
                } else {
                    *slot = next_high;
                    next_high += 1;
                }
            }
            let inversions = inversions(&permutation);
            CosetRep {
                permutation,
                inversions,
            }
        })
        .collect();
    reps.sort_by(|a, b| a.permutation.cmp(&b.permutation));
    Ok(reps)
}

/// `Σ_{σ ∈ S_{n,k}} q^{|σ|}`, the Gaussian binomial coefficient evaluated at `q`.
pub fn coset_weight_sum(n: usize, k: usize, q: f64) -> Result<f64> {
    Ok(coset_reps(n, k)?
        .iter()
        .map(|r| crate::qpow(q, r.inversions))
        .sum())
}

/// The mirror doubling of a pairing, as a perfect pairing of `1..=2|I|`.
///
/// The context is laid out on positions `1..=n` and reflected onto
/// `n+1..=2n`; every arc is kept together with its mirror image and every
/// uncontracted position is joined to its own mirror image. Half the crossing
/// number of the result equals the intertwining number of the input.
pub fn mirror_double(pairing: &Pairing) -> Vec<(usize, usize)> {
    let ctx = pairing.context();
    let n = ctx.len();
    let pos = |l: Label| ctx.position(l).expect("label in context") + 1;
    let mirror = |p: usize| 2 * n + 1 - p;
    let mut out = Vec::with_capacity(n);
    for &(s, t) in pairing.pairs() {
        let (a, b) = (pos(s), pos(t));
        out.push((a, b));
        out.push((mirror(b), mirror(a)));
    }
    for &x in pairing.free().elements() {
        let p = pos(x);
        out.push((p, mirror(p)));
    }
    out.sort_unstable();
    out
}
