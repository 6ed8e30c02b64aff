//! Implementations of the individual subcommands.

use std::path::Path;

use qfock::combinat::{coset_reps, coset_weight_sum, enumerate_pairings, IndexSet, Pairing};
use qfock::fock::{operator_norm, FockTensor, Metric};
use qfock::polywick::{
    counterterm_polynomial, delta_r, phi4_2d_configs, phi4_3d_configs, CountertermConfig, InsertionPattern,
};
use qfock::qsde::{bphz_constant, chen_residual, ito_report, levy_area, Mollifier, TimeGrid, QUADRATURE_TOLERANCE};
use qfock::wickalg::{
    expand_field_product, moment_from_gram, multiply, to_operator, triple_norm, vacuum_expectation, NormConstants,
    WickElement,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::output::ErrorInfo;
use crate::sample::{self, SeedableRng, SeededRng};
use crate::verify;

/// Why a command did not produce an `ok` document.
#[derive(Debug)]
pub enum Failure {
    /// Malformed invocation or input file; reported on standard error.
    Usage(String),
    /// The library rejected the computation.
    Compute(qfock::Error),
}

impl From<qfock::Error> for Failure {
    fn from(e: qfock::Error) -> Self {
        Failure::Compute(e)
    }
}

/// What a successful dispatch produced.
pub struct Outcome {
    pub outputs: Value,
    /// Data read from `--input`, or the random instance that was generated,
    /// echoed next to the arguments.
    pub input_document: Option<Value>,
    /// Set when the command ran to completion but reports a failure (a
    /// verification suite that did not pass).
    pub failed: Option<ErrorInfo>,
}

impl Outcome {
    fn ok(outputs: Value) -> Self {
        Self {
            outputs,
            input_document: None,
            failed: None,
        }
    }

    fn with_input(outputs: Value, input: Value) -> Self {
        Self {
            outputs,
            input_document: Some(input),
            failed: None,
        }
    }
}

type CmdResult = Result<Outcome, Failure>;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialise to JSON")
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<(T, Value), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let raw: Value =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{} is not JSON: {e}", path.display())))?;
    let parsed = serde_json::from_value(raw.clone())
        .map_err(|e| Failure::Usage(format!("{} has the wrong shape: {e}", path.display())))?;
    Ok((parsed, raw))
}

/// Runs one subcommand.
pub fn dispatch(command: &Command) -> CmdResult {
    match command {
        Command::Pairings(a) => pairings(a),
        Command::Cosets(a) => cosets(a),
        Command::Moment(a) => moment(a),
        Command::WickExpand(a) => wick_expand(a),
        Command::Multiply(a) => multiply_cmd(a),
        Command::Norm(a) => norm(a),
        Command::DeltaR(a) => delta_r_cmd(a),
        Command::Counterterm(a) => counterterm(a),
        Command::Levy(a) => levy(a),
        Command::Chen(a) => chen(a),
        Command::BphzConstant(a) => bphz(a),
        Command::Ito(a) => ito(a),
        Command::Verify(a) => verify::run(a),
    }
}

fn pairing_json(p: &Pairing) -> Value {
    let s = p.stats();
    json!({ "pairs": p.pairs(), "cr": s.cr, "sp": s.sp, "crb": s.crb })
}

fn pairings(a: &PairingsArgs) -> CmdResult {
    let set = IndexSet::first_n(a.n);
    let list: Vec<Value> = match a.k {
        Some(k) => {
            if 2 * k > a.n {
                return Err(qfock::Error::InvalidArgument(format!("{k} pairs do not fit into {} labels", a.n)).into());
            }
            enumerate_pairings(&set, Some(k)).iter().map(pairing_json).collect()
        }
        None => enumerate_pairings(&set, None).iter().map(pairing_json).collect(),
    };
    Ok(Outcome::ok(Value::Array(list)))
}

fn cosets(a: &CosetsArgs) -> CmdResult {
    let reps = coset_reps(a.n, a.k)?;
    let mut out = json!({ "count": reps.len(), "representatives": reps });
    if let Some(q) = a.q {
        out["weight_sum"] = json!(coset_weight_sum(a.n, a.k, q)?);
    }
    Ok(Outcome::ok(out))
}

fn moment(a: &MomentArgs) -> CmdResult {
    let mut letters: Vec<char> = Vec::new();
    let word: Vec<usize> = a
        .word
        .chars()
        .map(|c| match letters.iter().position(|&l| l == c) {
            Some(i) => i,
            None => {
                letters.push(c);
                letters.len() - 1
            }
        })
        .collect();
    let gram: Vec<Vec<f64>> = if a.gram == "identity" {
        let n = letters.len().max(1);
        (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect()
    } else {
        serde_json::from_str(&a.gram).map_err(|e| Failure::Usage(format!("--gram is neither `identity` nor a JSON matrix: {e}")))?
    };
    if letters.len() > gram.len() {
        return Err(qfock::Error::InvalidArgument(format!(
            "the word uses {} distinct letters but the Gram matrix has size {}",
            letters.len(),
            gram.len()
        ))
        .into());
    }
    let value = moment_from_gram(&gram, &word, a.q)?;
    Ok(Outcome::ok(json!({ "value": value })))
}

#[derive(Deserialize)]
struct VectorsInput {
    vectors: Vec<Vec<f64>>,
}

fn wick_expand(a: &WickExpandArgs) -> CmdResult {
    let fs = match &a.input {
        Some(path) => read_json::<VectorsInput>(path)?.0.vectors,
        None => {
            let mut rng = SeededRng::seed_from_u64(a.seed.seed);
            (0..a.n).map(|_| sample::vector(&mut rng, a.d)).collect()
        }
    };
    let d = fs.first().map_or(a.d, Vec::len);
    let element = expand_field_product(d, &fs, a.q)?;
    Ok(Outcome::with_input(
        json!({ "element": element, "vacuum_expectation": vacuum_expectation(&element) }),
        json!({ "vectors": fs }),
    ))
}

#[derive(Deserialize)]
struct PairInput {
    a: WickElement,
    b: WickElement,
}

fn multiply_cmd(args: &MultiplyArgs) -> CmdResult {
    let (a, b) = match &args.input {
        Some(path) => {
            let p = read_json::<PairInput>(path)?.0;
            (p.a, p.b)
        }
        None => {
            let mut rng = SeededRng::seed_from_u64(args.seed.seed);
            (
                sample::element(&mut rng, args.d, args.chaos),
                sample::element(&mut rng, args.d, args.chaos),
            )
        }
    };
    let product = multiply(&a, &b, args.q)?;
    Ok(Outcome::with_input(
        json!({ "product": product, "vacuum_expectation": vacuum_expectation(&product) }),
        json!({ "a": a, "b": b }),
    ))
}

fn norm(args: &NormArgs) -> CmdResult {
    let a = match &args.input {
        Some(path) => read_json::<WickElement>(path)?.0,
        None => {
            let mut rng = SeededRng::seed_from_u64(args.seed.seed);
            sample::element(&mut rng, args.d, args.chaos)
        }
    };
    let mut out = json!({
        "triple_norm": triple_norm(&a, args.q)?,
        "constants": NormConstants::new(args.q)?,
    });
    if let Some(cutoff) = args.n {
        let op = to_operator(&a, args.q, cutoff)?;
        let exact = op.exact_upto().ok_or(qfock::Error::NotExact {
            sector: 0,
            exact_upto: None,
            cutoff,
        })?;
        out["operator_norm_estimate"] = json!({
            "cutoff": cutoff,
            "sectors": [0, exact],
            "metric": "deformed",
            "value": operator_norm(&op, 0..=exact, Metric::Deformed(args.q))?,
        });
    }
    Ok(Outcome::with_input(out, to_value(&a)))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PatternInput {
    Word(String),
    Pattern(InsertionPattern),
}

#[derive(Deserialize)]
struct DeltaRInput {
    pattern: PatternInput,
    pairing: Vec<(usize, usize)>,
    f: FockTensor,
    operators: Vec<WickElement>,
}

fn delta_r_cmd(a: &DeltaRArgs) -> CmdResult {
    let (input, raw) = read_json::<DeltaRInput>(&a.input)?;
    let pattern = match input.pattern {
        PatternInput::Word(w) => InsertionPattern::parse(&w)?,
        PatternInput::Pattern(p) => p,
    };
    let pi = Pairing::new(input.pairing, pattern.legs())?;
    let result = delta_r(&pattern, &pi, &input.f, &input.operators, a.q)?;
    Ok(Outcome::with_input(json!({ "result": result }), raw))
}

fn counterterm(a: &CountertermArgs) -> CmdResult {
    let (label, configs, input) = match &a.input {
        Some(path) => {
            let (configs, raw) = read_json::<Vec<CountertermConfig>>(path)?;
            ("input".to_string(), configs, Some(raw))
        }
        None => match a.model {
            Model::Phi4_2d => ("phi4-2d".to_string(), phi4_2d_configs(), None),
            Model::Phi4_3d => (
                "phi4-3d".to_string(),
                phi4_3d_configs().into_iter().map(|c| c.config).collect(),
                None,
            ),
        },
    };
    let poly = counterterm_polynomial(&configs)?;
    let out = json!({
        "family": label,
        "configurations": configs.len(),
        "polynomial": poly,
        "display": poly.to_string(),
        "value_at_q1_delta1": poly.evaluate(1.0, 1.0),
    });
    Ok(Outcome {
        outputs: out,
        input_document: input,
        failed: None,
    })
}

fn levy(a: &LevyArgs) -> CmdResult {
    let grid = TimeGrid::new(a.horizon, a.grid)?;
    let one = WickElement::one(a.grid);
    let area = levy_area(&one, a.s, a.t, a.side.into(), &grid, a.q, a.c)?;
    let mut out = json!({ "area": area, "vacuum_expectation": vacuum_expectation(&area) });
    if a.q.abs() < 1.0 {
        out["triple_norm"] = json!(triple_norm(&area, a.q)?);
    }
    Ok(Outcome::ok(out))
}

fn chen(a: &ChenArgs) -> CmdResult {
    let grid = TimeGrid::new(a.horizon, a.grid)?;
    let one = WickElement::one(a.grid);
    let triples: Vec<[f64; 3]> = match &a.times {
        Some(t) if t.len() == 3 => vec![[t[0], t[1], t[2]]],
        Some(t) => return Err(Failure::Usage(format!("--times needs exactly three values, got {}", t.len()))),
        None => {
            let m = a.grid;
            let at = |i: usize| a.horizon * i as f64 / m as f64;
            let mut v = Vec::new();
            for i in 0..=m {
                for j in i..=m {
                    for k in j..=m {
                        v.push([at(i), at(j), at(k)]);
                    }
                }
            }
            v
        }
    };
    let mut worst: f64 = 0.0;
    for [s, u, t] in &triples {
        let r = chen_residual(*s, *u, *t, &one, a.side.into(), &grid, a.q, a.c)?;
        worst = worst.max(r.max_abs());
    }
    Ok(Outcome::ok(json!({ "triples": triples.len(), "max_residual": worst })))
}

fn bphz(a: &BphzArgs) -> CmdResult {
    let moll = Mollifier::by_name(&a.mollifier)?;
    let value = bphz_constant(&moll, a.eps)?;
    Ok(Outcome::ok(json!({
        "value": value,
        "mollifier": moll.name(),
        "eps": a.eps,
        "quadrature_tolerance": QUADRATURE_TOLERANCE,
    })))
}

fn ito(a: &ItoArgs) -> CmdResult {
    let report = ito_report(a.p, a.t, a.horizon, &a.grid, a.q)?;
    Ok(Outcome::ok(to_value(&report)))
}
