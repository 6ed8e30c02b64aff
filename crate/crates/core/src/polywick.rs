//! Wick products with operator insertions and their counterterm polynomials.
//!
//! An [`InsertionPattern`] is a word in two letters: `Leg` slots carry noise
//! legs and `Insert` slots carry operators placed between them. The legs are
//! split by the insertion slots into consecutive (possibly empty) blocks
//! `I₁, …, I_n`. Given coefficients `G_j` for the inserted operators, the legs
//! of `G_j` form a block `J_j` and the full ordered set is the interleaving
//! `I₁ J₁ I₂ … J_{n−1} I_n`.
//!
//! [`restricted_wick`] contracts the surviving legs against insertion legs
//! (never two noise legs with each other), [`delta_r`] sums this over the
//! chaos components of the inserted operators, and [`disentangle_check`] checks that
//! a plain product with insertions decomposes into those maps, one for each
//! pairing of the noise legs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::combinat::{
    crossing_number, enumerate_pairings, enumerate_restricted_pairings, relative_intertwining,
    IndexSet, Pairing, PartitionedSet,
};
use crate::error::{Error, Result};
use crate::fock::FockTensor;
use crate::qpow;
use crate::wickalg::{multiply, multiply_all, WickElement};

/// Kind of a slot in an insertion pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Slot {
    /// A noise leg.
    Leg,
    /// An inserted operator.
    Insert,
}

/// An ordered word of legs and insertion slots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertionPattern {
    slots: Vec<Slot>,
}

impl InsertionPattern {
    /// Builds a pattern; it must contain at least one slot.
    pub fn new(slots: Vec<Slot>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidStructure("pattern has no slots".into()));
        }
        Ok(Self { slots })
    }

    /// Parses a compact form such as `"L I L"` or `"LIL"`.
    pub fn parse(s: &str) -> Result<Self> {
        let slots = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c.to_ascii_uppercase() {
                'L' => Ok(Slot::Leg),
                'I' => Ok(Slot::Insert),
                other => Err(Error::InvalidArgument(format!("unknown slot letter {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Self::new(slots)
    }

    /// The slots in order.
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Number of noise legs.
    pub fn leg_count(&self) -> usize {
        self.slots.iter().filter(|s| **s == Slot::Leg).count()
    }

    /// Number of insertion slots.
    pub fn insert_count(&self) -> usize {
        self.slots.len() - self.leg_count()
    }

    /// The noise legs numbered `1..=leg_count`, split into blocks by the insertions.
    pub fn leg_blocks(&self) -> PartitionedSet {
        let mut sizes = vec![0];
        for s in &self.slots {
            match s {
                Slot::Leg => *sizes.last_mut().expect("nonempty") += 1,
                Slot::Insert => sizes.push(0),
            }
        }
        PartitionedSet::from_sizes(1, &sizes)
    }

    /// The set of noise legs `{1, …, leg_count}`.
    pub fn legs(&self) -> IndexSet {
        IndexSet::first_n(self.leg_count())
    }
}

/// Position of a label of the interleaved set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Woven {
    /// Noise leg with the given number.
    Leg(usize),
    /// Slot `r` of the insertion with index `j`.
    Ins(usize, usize),
}

/// The interleaving of legs and insertion legs for given insertion degrees.
struct Weave {
    /// What each woven label (1-based, by position) stands for.
    entries: Vec<Woven>,
}

impl Weave {
    fn new(pattern: &InsertionPattern, degrees: &[usize]) -> Self {
        let mut entries = Vec::new();
        let (mut leg, mut ins) = (0, 0);
        for s in pattern.slots() {
            match s {
                Slot::Leg => {
                    leg += 1;
                    entries.push(Woven::Leg(leg));
                }
                Slot::Insert => {
                    entries.extend((0..degrees[ins]).map(|r| Woven::Ins(ins, r)));
                    ins += 1;
                }
            }
        }
        Self { entries }
    }

    fn label_of(&self, w: Woven) -> usize {
        self.entries.iter().position(|&e| e == w).expect("present") + 1
    }
}

fn check_pairing_context(pattern: &InsertionPattern, pi: &Pairing) -> Result<()> {
    if pi.context() != &pattern.legs() {
        return Err(Error::InvalidStructure(
            "pairing must live on the legs 1..=leg_count of the pattern".into(),
        ));
    }
    Ok(())
}

/// The restricted Wick map `ξ^{R;I,J;π}(F; G₁, …, G_{n−1})`.
///
/// `pi` is a pairing of the noise legs that has already been contracted, `f`
/// the coefficient over the remaining legs `L = I∖π` (in order) and `gs` the
/// coefficients of the inserted operators. The result sums, over pairings `σ`
/// of `L ≀ J` between different blocks and never joining two noise legs,
/// `q^{crb(π,σ) + crb(σ)}` times the contraction of the interleaved tensor.
pub fn restricted_wick(
    pattern: &InsertionPattern,
    pi: &Pairing,
    f: &FockTensor,
    gs: &[FockTensor],
    q: f64,
) -> Result<WickElement> {
    check_pairing_context(pattern, pi)?;
    if gs.len() != pattern.insert_count() {
        return Err(Error::InvalidArgument(format!(
            "pattern has {} insertions but {} coefficients were given",
            pattern.insert_count(),
            gs.len()
        )));
    }
    let contracted = pi.legs();
    let surviving: Vec<usize> = pattern.legs().without(&contracted).elements().to_vec();
    if f.degree() != surviving.len() {
        return Err(Error::DegreeMismatch {
            expected: surviving.len(),
            found: f.degree(),
        });
    }
    let d = f.dim();
    if let Some(g) = gs.iter().find(|g| g.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: g.dim(),
        });
    }

    let degrees: Vec<usize> = gs.iter().map(FockTensor::degree).collect();
    let weave = Weave::new(pattern, &degrees);
    let full = IndexSet::first_n(weave.entries.len());
    let pi_woven = Pairing::new(
        pi.pairs()
            .iter()
            .map(|&(s, t)| (weave.label_of(Woven::Leg(s)), weave.label_of(Woven::Leg(t))))
            .collect(),
        full.clone(),
    )?;

    // Blocks of L ≀ J, labelled by woven position.
    let leg_blocks: Vec<IndexSet> = pattern
        .leg_blocks()
        .blocks()
        .iter()
        .map(|b| {
            IndexSet::from_unsorted(
                b.elements()
                    .iter()
                    .filter(|l| !contracted.contains(*l))
                    .map(|&l| weave.label_of(Woven::Leg(l)))
                    .collect(),
            )
        })
        .collect();
    let ins_blocks: Vec<IndexSet> = degrees
        .iter()
        .enumerate()
        .map(|(j, &g)| {
            IndexSet::from_unsorted((0..g).map(|r| weave.label_of(Woven::Ins(j, r))).collect())
        })
        .collect();
    let legs_ps = PartitionedSet::new(leg_blocks)?;
    let ins_ps = PartitionedSet::new(ins_blocks)?;
    let reduced = full.without(&pi_woven.legs());

    // The interleaved tensor over L ≀ J: F ⊗ G₁ ⊗ … rearranged into woven order.
    let mut joint = f.clone();
    for g in gs {
        joint = joint.tensor(g)?;
    }
    let mut stacked_slot = BTreeMap::new();
    for (i, &l) in surviving.iter().enumerate() {
        stacked_slot.insert(weave.label_of(Woven::Leg(l)), i);
    }
    let mut offset = surviving.len();
    for (j, &g) in degrees.iter().enumerate() {
        for r in 0..g {
            stacked_slot.insert(weave.label_of(Woven::Ins(j, r)), offset + r);
        }
        offset += g;
    }
    let source: Vec<usize> = reduced.elements().iter().map(|l| stacked_slot[l]).collect();
    let woven_tensor = joint.permute_slots(&source)?;

    let mut out = WickElement::zero(d);
    for sigma in enumerate_restricted_pairings(&legs_ps, &ins_ps)? {
        let sigma_full = sigma.with_context(full.clone())?;
        let relative = relative_intertwining(&pi_woven, &sigma_full)?;
        let own = sigma.with_context(reduced.clone())?.stats().crb as i64;
        let weight = q.powi((relative + own) as i32);
        if weight == 0.0 {
            continue;
        }
        let slots: Vec<(usize, usize)> = sigma
            .pairs()
            .iter()
            .map(|&(s, t)| {
                (
                    reduced.position(s).expect("in reduced set"),
                    reduced.position(t).expect("in reduced set"),
                )
            })
            .collect();
        out.add_tensor(weight, &woven_tensor.contract_slots(&slots)?)?;
    }
    Ok(out)
}

/// The renormalised multiplication map `Δ^{R;I,π}(F; A₀, …, A_n)`.
///
/// The inner operators `A₁ … A_{n−1}` are expanded into chaos components and
/// fed to [`restricted_wick`]; the outer ones multiply the result from the
/// left and right.
pub fn delta_r(
    pattern: &InsertionPattern,
    pi: &Pairing,
    f: &FockTensor,
    operators: &[WickElement],
    q: f64,
) -> Result<WickElement> {
    let inserts = pattern.insert_count();
    if operators.len() != inserts + 2 {
        return Err(Error::InvalidArgument(format!(
            "expected {} operators, found {}",
            inserts + 2,
            operators.len()
        )));
    }
    let d = f.dim();
    let inner_ops = &operators[1..=inserts];
    let mut middle = WickElement::zero(d);
    let mut choice: Vec<Vec<&FockTensor>> = vec![Vec::new()];
    for op in inner_ops {
        let comps: Vec<&FockTensor> = op.components().values().collect();
        choice = choice
            .into_iter()
            .flat_map(|prefix| {
                comps.iter().map(move |c| {
                    let mut p = prefix.clone();
                    p.push(*c);
                    p
                })
            })
            .collect();
    }
    for gs in choice {
        let gs: Vec<FockTensor> = gs.into_iter().cloned().collect();
        middle.add_scaled(1.0, &restricted_wick(pattern, pi, f, &gs, q)?)?;
    }
    let left = multiply(&operators[0], &middle, q)?;
    multiply(&left, &operators[inserts + 1], q)
}

/// Both sides of the disentanglement identity for given legs and operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Disentanglement {
    /// The plain product `A₀ ξ(f…) A₁ ξ(f…) ⋯ A_n`.
    pub lhs: WickElement,
    /// `Σ_{π} Π_{(i,j)∈π} ⟨f_i, f_j⟩ Δ^{R;I,π}(⊗_{I∖π} f; A₀, …, A_n)`.
    pub rhs: WickElement,
}

/// Computes both sides of the decomposition of a product with insertions
/// into renormalised multiplication maps, one for every pairing of the legs.
pub fn disentangle_check(
    pattern: &InsertionPattern,
    fs: &[Vec<f64>],
    operators: &[WickElement],
    q: f64,
) -> Result<Disentanglement> {
    if fs.len() != pattern.leg_count() {
        return Err(Error::InvalidArgument(format!(
            "pattern has {} legs but {} vectors were given",
            pattern.leg_count(),
            fs.len()
        )));
    }
    if operators.len() != pattern.insert_count() + 2 {
        return Err(Error::InvalidArgument(format!(
            "expected {} operators, found {}",
            pattern.insert_count() + 2,
            operators.len()
        )));
    }
    let d = operators[0].dim();
    let mut factors = vec![operators[0].clone()];
    let (mut leg, mut ins) = (0, 1);
    for s in pattern.slots() {
        match s {
            Slot::Leg => {
                factors.push(WickElement::field(&fs[leg]));
                leg += 1;
            }
            Slot::Insert => {
                factors.push(operators[ins].clone());
                ins += 1;
            }
        }
    }
    factors.push(operators[ins].clone());
    let lhs = multiply_all(d, &factors, q)?;

    let mut rhs = WickElement::zero(d);
    for pi in enumerate_pairings(&pattern.legs(), None) {
        let weight: f64 = pi
            .pairs()
            .iter()
            .map(|&(s, t)| fs[s - 1].iter().zip(&fs[t - 1]).map(|(a, b)| a * b).sum::<f64>())
            .product();
        if weight == 0.0 {
            continue;
        }
        let free: Vec<Vec<f64>> = pi.free().elements().iter().map(|&l| fs[l - 1].clone()).collect();
        let f = FockTensor::product_of(d, &free)?;
        rhs.add_scaled(weight, &delta_r(pattern, &pi, &f, operators, q)?)?;
    }
    Ok(Disentanglement { lhs, rhs })
}

/// A fully contracted word of legs and insertion slots.
///
/// Slots are identified by ordered labels; the generators use `1..=n` but any
/// increasing relabelling describes the same word.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountertermConfig {
    /// Number of leg slots.
    pub n_legs: usize,
    /// Labels of the slots holding insertions.
    pub insert_positions: Vec<usize>,
    /// Pairs of leg labels.
    pub pairing: Vec<(usize, usize)>,
}

/// Exponents `(a, b)` of the monomial `q^a Δ^b` contributed by one configuration.
///
/// `a` is the crossing number of the pairing; `b` counts, over all arcs, the
/// insertion slots strictly inside the arc.
pub fn counterterm_monomial(config: &CountertermConfig) -> Result<(usize, usize)> {
    let inserts = IndexSet::from_unsorted(config.insert_positions.clone());
    if inserts.len() != config.insert_positions.len() {
        return Err(Error::InvalidStructure(format!(
            "insertion positions {:?} are not distinct",
            config.insert_positions
        )));
    }
    let endpoints: Vec<usize> = config.pairing.iter().flat_map(|&(s, t)| [s, t]).collect();
    let legs = IndexSet::from_unsorted(endpoints.clone());
    if legs.len() != endpoints.len() {
        return Err(Error::PairingsNotDisjoint);
    }
    if legs.elements().iter().any(|&l| inserts.contains(l)) {
        return Err(Error::InvalidStructure(
            "a pairing touches an insertion slot".into(),
        ));
    }
    if legs.len() != config.n_legs {
        return Err(Error::InvalidStructure(format!(
            "incomplete pairing: {} of {} legs contracted",
            legs.len(),
            config.n_legs
        )));
    }
    let pi = Pairing::new(config.pairing.clone(), legs)?;
    let a = crossing_number(pi.pairs());
    let b = pi
        .pairs()
        .iter()
        .map(|&(s, t)| inserts.elements().iter().filter(|&&x| s < x && x < t).count())
        .sum();
    Ok((a, b))
}

/// A polynomial `Σ c_{ab} q^a Δ^b` with integer coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeltaPolynomial {
    terms: BTreeMap<(usize, usize), i64>,
}

#[derive(Serialize, Deserialize)]
struct DeltaTerm {
    q: usize,
    delta: usize,
    count: i64,
}

impl Serialize for DeltaPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<DeltaTerm> = self
            .terms
            .iter()
            .map(|(&(q, delta), &count)| DeltaTerm { q, delta, count })
            .collect();
        terms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DeltaPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<DeltaTerm>::deserialize(d)?;
        let mut p = DeltaPolynomial::default();
        for t in terms {
            p.add(t.q, t.delta, t.count);
        }
        Ok(p)
    }
}

impl DeltaPolynomial {
    /// Builds a polynomial from `(q-power, Δ-power, coefficient)` triples.
    pub fn from_terms(terms: &[(usize, usize, i64)]) -> Self {
        let mut p = Self::default();
        for &(a, b, c) in terms {
            p.add(a, b, c);
        }
        p
    }

    /// Adds `count · q^a Δ^b`.
    pub fn add(&mut self, a: usize, b: usize, count: i64) {
        let entry = self.terms.entry((a, b)).or_insert(0);
        *entry += count;
        if *entry == 0 {
            self.terms.remove(&(a, b));
        }
    }

    /// Nonzero coefficients keyed by `(q-power, Δ-power)`.
    pub fn terms(&self) -> &BTreeMap<(usize, usize), i64> {
        &self.terms
    }

    /// Numeric value at scalar `q` and `Δ`.
    pub fn evaluate(&self, q: f64, delta: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(a, b), &c)| c as f64 * qpow(q, a) * qpow(delta, b))
            .sum()
    }

    /// The operator `Σ c_{ab} q^a Δ_q^b` applied to a Wick element.
    pub fn apply(&self, x: &WickElement, q: f64) -> Result<WickElement> {
        let mut out = WickElement::zero(x.dim());
        for (&(a, b), &c) in &self.terms {
            let mut y = x.clone();
            for _ in 0..b {
                y = crate::wickalg::delta_q(&y, q);
            }
            out.add_scaled(c as f64 * qpow(q, a), &y)?;
        }
        Ok(out)
    }
}

impl fmt::Display for DeltaPolynomial {
    /// Renders e.g. `3+2q+(4+4q)Δ+(2+3q)Δ²`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn sup(n: usize) -> String {
            const DIGITS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
            n.to_string()
                .chars()
                .map(|c| DIGITS[c.to_digit(10).expect("digit") as usize])
                .collect()
        }
        fn power(sym: &str, n: usize) -> String {
            match n {
                0 => String::new(),
                1 => sym.to_string(),
                n => format!("{sym}{}", sup(n)),
            }
        }
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut by_delta: BTreeMap<usize, Vec<(usize, i64)>> = BTreeMap::new();
        for (&(a, b), &c) in &self.terms {
            by_delta.entry(b).or_default().push((a, c));
        }
        let mut first = true;
        for (b, coeffs) in by_delta {
            let inner: Vec<String> = coeffs
                .iter()
                .map(|&(a, c)| {
                    let q = power("q", a);
                    match (c, q.is_empty()) {
                        (c, true) => c.to_string(),
                        (1, false) => q,
                        (-1, false) => format!("-{q}"),
                        (c, false) => format!("{c}{q}"),
                    }
                })
                .collect();
            let mut poly = inner.join("+").replace("+-", "-");
            let delta = power("Δ", b);
            if !delta.is_empty() {
                if coeffs.len() > 1 {
                    poly = format!("({poly})");
                } else if poly == "1" {
                    poly.clear();
                } else if poly == "-1" {
                    poly = "-".into();
                }
            }
            if !first && !poly.starts_with('-') {
                write!(f, "+")?;
            }
            write!(f, "{poly}{delta}")?;
            first = false;
        }
        Ok(())
    }
}

/// Sum of the monomials of all configurations.
pub fn counterterm_polynomial(configs: &[CountertermConfig]) -> Result<DeltaPolynomial> {
    let mut p = DeltaPolynomial::default();
    for c in configs {
        let (a, b) = counterterm_monomial(c)?;
        p.add(a, b, 1);
    }
    Ok(p)
}

/// Mass-counterterm configurations of the two-dimensional quartic model.
///
/// A cubic product of three slots, one of which is the inserted operator;
/// the two remaining legs are contracted with each other.
pub fn phi4_2d_configs() -> Vec<CountertermConfig> {
    (1..=3)
        .rev()
        .map(|insert| {
            let legs: Vec<usize> = (1..=3).filter(|&p| p != insert).collect();
            CountertermConfig {
                n_legs: 2,
                insert_positions: vec![insert],
                pairing: vec![(legs[0], legs[1])],
            }
        })
        .collect()
}

/// Where the nested cubic product sits among the three outer factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NestedPosition {
    /// First outer factor.
    Left,
    /// Second outer factor.
    Middle,
    /// Third outer factor.
    Right,
}

/// Labelled mass-counterterm configuration of the three-dimensional quartic model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedConfig {
    /// Outer slot holding the nested product.
    pub position: NestedPosition,
    /// 1-based slot of the inserted operator inside the nested product.
    pub insert_slot: usize,
    /// The flattened configuration.
    pub config: CountertermConfig,
}

/// Mass-counterterm configurations of the three-dimensional quartic model.
///
/// Each configuration is a cubic product of three outer factors, one of which
/// is itself a cubic product of two noise legs and the inserted operator.
/// Flattening leaves in order gives five slots: four legs and one insertion.
/// The two outer legs must each be contracted with one of the two nested legs
/// (contracting the outer legs with each other, or the nested legs with each
/// other, is removed by the renormalisation of the inner and outer products),
/// which leaves exactly two pairings per slot arrangement: 3 outer positions
/// × 3 insertion slots × 2 pairings = 18 configurations.
pub fn phi4_3d_configs() -> Vec<NestedConfig> {
    let mut out = Vec::new();
    for position in [NestedPosition::Left, NestedPosition::Middle, NestedPosition::Right] {
        for insert_slot in 1..=3 {
            // Build the flattened word, remembering which slot is which.
            #[derive(PartialEq)]
            enum Leaf {
                Outer,
                Nested,
                Insert,
            }
            let nested: Vec<Leaf> = (1..=3)
                .map(|s| if s == insert_slot { Leaf::Insert } else { Leaf::Nested })
                .collect();
            let mut word: Vec<Leaf> = Vec::new();
            let outer_index = match position {
                NestedPosition::Left => 0,
                NestedPosition::Middle => 1,
                NestedPosition::Right => 2,
            };
            let mut nested = Some(nested);
            for i in 0..3 {
                if i == outer_index {
                    word.extend(nested.take().expect("placed once"));
                } else {
                    word.push(Leaf::Outer);
                }
            }
            let pos = |kind: Leaf| -> Vec<usize> {
                word.iter()
                    .enumerate()
                    .filter(|(_, l)| **l == kind)
                    .map(|(i, _)| i + 1)
                    .collect()
            };
            let outer = pos(Leaf::Outer);
            let inner = pos(Leaf::Nested);
            let insert = pos(Leaf::Insert);
            for (a, b) in [(0, 1), (1, 0)] {
                let mut pairing = vec![(outer[0], inner[a]), (outer[1], inner[b])];
                for p in &mut pairing {
                    if p.0 > p.1 {
                        *p = (p.1, p.0);
                    }
                }
                pairing.sort_unstable();
                out.push(NestedConfig {
                    position,
                    insert_slot,
                    config: CountertermConfig {
                        n_legs: 4,
                        insert_positions: insert.clone(),
                        pairing,
                    },
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n_legs: usize, inserts: &[usize], pairing: &[(usize, usize)]) -> CountertermConfig {
        CountertermConfig {
            n_legs,
            insert_positions: inserts.to_vec(),
            pairing: pairing.to_vec(),
        }
    }

    #[test]
    fn monomials_of_the_two_quartic_pairings() {
        assert_eq!(counterterm_monomial(&cfg(4, &[3], &[(1, 2), (4, 5)])).unwrap(), (0, 0));
        assert_eq!(counterterm_monomial(&cfg(4, &[3], &[(1, 4), (2, 5)])).unwrap(), (1, 2));
        assert_eq!(counterterm_monomial(&cfg(2, &[2], &[(1, 3)])).unwrap(), (0, 1));
    }

    #[test]
    fn monomial_rejects_incomplete_pairings() {
        assert!(counterterm_monomial(&cfg(4, &[3], &[(1, 2)])).is_err());
        assert!(counterterm_monomial(&cfg(2, &[2], &[(1, 2)])).is_err());
        assert!(counterterm_monomial(&cfg(4, &[3], &[(1, 3), (2, 4)])).is_err());
        assert!(counterterm_monomial(&cfg(4, &[3], &[(1, 2), (2, 4)])).is_err());
    }

    #[test]
    fn two_dimensional_polynomial() {
        let p = counterterm_polynomial(&phi4_2d_configs()).unwrap();
        assert_eq!(p, DeltaPolynomial::from_terms(&[(0, 0, 2), (0, 1, 1)]));
        assert_eq!(p.to_string(), "2+Δ");
    }

    #[test]
    fn three_dimensional_polynomial() {
        let configs: Vec<CountertermConfig> =
            phi4_3d_configs().into_iter().map(|c| c.config).collect();
        assert_eq!(configs.len(), 18);
        let p = counterterm_polynomial(&configs).unwrap();
        assert_eq!(p.to_string(), "3+2q+(4+4q)Δ+(2+3q)Δ²");
        assert_eq!(p.evaluate(1.0, 1.0), 18.0);
    }

    #[test]
    fn polynomial_display_of_single_terms() {
        assert_eq!(DeltaPolynomial::from_terms(&[(1, 2, 1)]).to_string(), "qΔ²");
        assert_eq!(DeltaPolynomial::from_terms(&[(0, 1, 1)]).to_string(), "Δ");
        assert_eq!(DeltaPolynomial::default().to_string(), "0");
    }

    #[test]
    fn polynomial_json_round_trip() {
        let p = DeltaPolynomial::from_terms(&[(0, 0, 2), (0, 1, 1)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"[{"q":0,"delta":0,"count":2},{"q":0,"delta":1,"count":1}]"#
        );
        let back: DeltaPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn pattern_parsing_and_blocks() {
        let p = InsertionPattern::parse("L I L I L").unwrap();
        assert_eq!((p.leg_count(), p.insert_count()), (3, 2));
        let blocks: Vec<Vec<usize>> = p
            .leg_blocks()
            .blocks()
            .iter()
            .map(|b| b.elements().to_vec())
            .collect();
        assert_eq!(blocks, vec![vec![1], vec![2], vec![3]]);
        let s = serde_json::to_string(&InsertionPattern::parse("LI").unwrap()).unwrap();
        assert_eq!(s, r#"{"slots":[{"type":"leg"},{"type":"insert"}]}"#);
    }

    #[test]
    fn no_insertions_and_no_pairing_give_the_wick_product() {
        let p = InsertionPattern::parse("LL").unwrap();
        let f = FockTensor::product_of(2, &[vec![1.0, 2.0], vec![0.3, -1.0]]).unwrap();
        let out = restricted_wick(&p, &Pairing::empty(p.legs()), &f, &[], 0.4).unwrap();
        assert_eq!(out, WickElement::from_tensor(f));
    }

    #[test]
    fn scalar_insertions_admit_no_contractions() {
        let p = InsertionPattern::parse("LIL").unwrap();
        let f = FockTensor::product_of(2, &[vec![1.0, 2.0], vec![0.3, -1.0]]).unwrap();
        let g = FockTensor::scalar(2, 1.0);
        let out = restricted_wick(&p, &Pairing::empty(p.legs()), &f, &[g], 0.4).unwrap();
        assert_eq!(out, WickElement::from_tensor(f));
    }

    #[test]
    fn restricted_wick_rejects_degree_mismatch() {
        let p = InsertionPattern::parse("LIL").unwrap();
        let f = FockTensor::vector(&[1.0, 0.0]);
        let g = FockTensor::scalar(2, 1.0);
        assert!(restricted_wick(&p, &Pairing::empty(p.legs()), &f, &[g], 0.4).is_err());
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn vectors() -> [Vec<f64>; 3] {
        [
            vec![0.3, -1.1, 0.7],
            vec![1.2, 0.4, -0.5],
            vec![-0.6, 0.9, 0.8],
        ]
    }

    #[test]
    fn outer_pairing_across_two_insertions() {
        let q = 0.45;
        let [f2, g1, g2] = vectors();
        let p = InsertionPattern::parse("LILIL").unwrap();
        let pi = Pairing::new(vec![(1, 3)], p.legs()).unwrap();
        let ops = [
            WickElement::one(3),
            WickElement::field(&g1),
            WickElement::field(&g2),
            WickElement::one(3),
        ];
        let got = delta_r(&p, &pi, &FockTensor::vector(&f2), &ops, q).unwrap();
        let mut expected = WickElement::zero(3);
        let t3 = FockTensor::product_of(3, &[g1.clone(), f2.clone(), g2.clone()]).unwrap();
        expected.add_tensor(q.powi(3), &t3).unwrap();
        expected.add_tensor(q * q * dot(&g1, &g2), &FockTensor::vector(&f2)).unwrap();
        expected.add_tensor(q * dot(&f2, &g2), &FockTensor::vector(&g1)).unwrap();
        expected.add_tensor(q * dot(&g1, &f2), &FockTensor::vector(&g2)).unwrap();
        assert!(got.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn adjacent_pairing_across_one_insertion() {
        let q = -0.35;
        let [f3, g1, g2] = vectors();
        let p = InsertionPattern::parse("LILIL").unwrap();
        let pi = Pairing::new(vec![(1, 2)], p.legs()).unwrap();
        let ops = [
            WickElement::one(3),
            WickElement::field(&g1),
            WickElement::field(&g2),
            WickElement::one(3),
        ];
        let got = delta_r(&p, &pi, &FockTensor::vector(&f3), &ops, q).unwrap();
        let t3 = FockTensor::product_of(3, &[g1.clone(), g2.clone(), f3.clone()]).unwrap();
        assert!(
            (got.chaos(3).unwrap().coeffs().iter())
                .zip(t3.scaled(q).coeffs())
                .all(|(a, b)| (a - b).abs() < 1e-13)
        );
        // The first-chaos part lists ⟨g₁,g₂⟩ξ(f₃) and ⟨g₂,f₃⟩ξ(g₁) with weight q;
        // the remaining ⟨g₁,f₃⟩ξ(g₂) term crosses the arc and straddles g₂'s leg.
        let mut first = FockTensor::zeros(3, 1).unwrap();
        first.add_scaled(q * dot(&g1, &g2), &FockTensor::vector(&f3)).unwrap();
        first.add_scaled(q * dot(&g2, &f3), &FockTensor::vector(&g1)).unwrap();
        first.add_scaled(q * q * dot(&g1, &f3), &FockTensor::vector(&g2)).unwrap();
        let diff = got.chaos(1).unwrap().coeffs().iter().zip(first.coeffs());
        assert!(diff.clone().all(|(a, b)| (a - b).abs() < 1e-13), "{:?}", got.chaos(1));
        assert!(got.chaos(2).is_none() && got.chaos(0).is_none());
    }

    #[test]
    fn disentanglement_of_three_legs_and_two_fields() {
        let q = 0.5;
        let [f1, f2, f3] = vectors();
        let p = InsertionPattern::parse("LILIL").unwrap();
        let ops = [
            WickElement::one(3),
            WickElement::field(&[0.2, 0.1, -0.4]),
            WickElement::field(&[-0.7, 0.5, 0.3]),
            WickElement::one(3),
        ];
        let out = disentangle_check(&p, &[f1, f2, f3], &ops, q).unwrap();
        assert!(out.lhs.max_abs_diff(&out.rhs) < 1e-12);
    }

    #[test]
    fn disentanglement_without_insertions_is_the_wick_expansion() {
        let q = 0.3;
        let fs = vectors().to_vec();
        let p = InsertionPattern::parse("LLL").unwrap();
        let ops = [WickElement::one(3), WickElement::one(3)];
        let out = disentangle_check(&p, &fs, &ops, q).unwrap();
        let expansion = crate::wickalg::expand_field_product(3, &fs, q).unwrap();
        assert!(out.lhs.max_abs_diff(&expansion) < 1e-13);
        assert!(out.rhs.max_abs_diff(&expansion) < 1e-13);
    }

    #[test]
    fn delta_r_checks_operator_count() {
        let p = InsertionPattern::parse("LIL").unwrap();
        let f = FockTensor::product_of(1, &[vec![1.0], vec![1.0]]).unwrap();
        let r = delta_r(&p, &Pairing::empty(p.legs()), &f, &[WickElement::one(1)], 0.0);
        assert!(r.is_err());
    }

    #[test]
    fn shipped_fixture_matches_the_generator() {
        let fixture: Vec<NestedConfig> =
            serde_json::from_str(include_str!("../fixtures/phi43_counterterm_configs.json"))
                .unwrap();
        assert_eq!(fixture, phi4_3d_configs());
    }

    #[test]
    fn per_position_totals() {
        let total = |pos: NestedPosition| {
            let configs: Vec<CountertermConfig> = phi4_3d_configs()
                .into_iter()
                .filter(|c| c.position == pos)
                .map(|c| c.config)
                .collect();
            counterterm_polynomial(&configs).unwrap().to_string()
        };
        assert_eq!(total(NestedPosition::Middle), "1+(2+2q)Δ+qΔ²");
        assert_eq!(total(NestedPosition::Left), "1+q+(1+q)Δ+(1+q)Δ²");
        assert_eq!(total(NestedPosition::Right), total(NestedPosition::Left));
    }
}
