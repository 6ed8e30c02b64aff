//! Command-line arguments.
//!
//! Every argument struct is serialisable so that the parsed invocation can be
//! echoed verbatim into the `inputs` field of the result document.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Default seed used by every randomised command when neither `--seed` nor
/// `QFOCK_SEED` is given.
pub const DEFAULT_SEED: u64 = 20240601;

/// Exact numerics for q-deformed Gaussian operator algebras, as JSON.
#[derive(Debug, Parser)]
#[command(name = "qfock", version, about, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

/// Options shared by every subcommand.
#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Write the result document to this file instead of standard output.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Record the wall-clock time in `elapsed_ms` (otherwise it is 0 so that
    /// output is byte-identical across runs).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub timing: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Enumerate the k-pairings of {1, …, n} with their crossing statistics.
    Pairings(PairingsArgs),
    /// List minimal coset representatives of S_n / (S_k × S_{n−k}).
    Cosets(CosetsArgs),
    /// Vacuum moment of a word of fields, given a Gram matrix.
    Moment(MomentArgs),
    /// Wick expansion of a product of fields ξ(f₁)⋯ξ(f_n).
    WickExpand(WickExpandArgs),
    /// Product of two Wick elements.
    Multiply(MultiplyArgs),
    /// Graded norm of a Wick element, optionally with an operator-norm estimate.
    Norm(NormArgs),
    /// Renormalised multiplication map with operator insertions.
    DeltaR(DeltaRArgs),
    /// Mass counterterm polynomial of a family of configurations.
    Counterterm(CountertermArgs),
    /// Renormalised Lévy area of the q-Brownian motion on a grid.
    Levy(LevyArgs),
    /// Residual of the Chen identity for Lévy areas.
    Chen(ChenArgs),
    /// Renormalisation constant of a mollified noise.
    BphzConstant(BphzArgs),
    /// Discrete Itô residual for F(x) = x^p over a family of grids.
    Ito(ItoArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
}

impl Command {
    /// The subcommand name as typed on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pairings(_) => "pairings",
            Command::Cosets(_) => "cosets",
            Command::Moment(_) => "moment",
            Command::WickExpand(_) => "wick-expand",
            Command::Multiply(_) => "multiply",
            Command::Norm(_) => "norm",
            Command::DeltaR(_) => "delta-r",
            Command::Counterterm(_) => "counterterm",
            Command::Levy(_) => "levy",
            Command::Chen(_) => "chen",
            Command::BphzConstant(_) => "bphz-constant",
            Command::Ito(_) => "ito",
            Command::Verify(_) => "verify",
        }
    }
}

/// Seed flag shared by the randomised commands.
#[derive(Debug, Args, Serialize)]
pub struct SeedArg {
    /// Seed of the random generator.
    #[arg(long, env = "QFOCK_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct PairingsArgs {
    /// Size of the index set {1, …, n}.
    #[arg(long)]
    pub n: usize,
    /// Number of pairs; all sizes when omitted.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct CosetsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Also report Σ q^{inv(σ)} at this q.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,
    /// `identity`, or a JSON matrix such as `[[1,0.5],[0.5,1]]`.
    #[arg(long, default_value = "identity")]
    pub gram: String,
    /// Word of letters; distinct letters are mapped to basis vectors 0, 1, …
    /// in order of first appearance.
    #[arg(long)]
    pub word: String,
}

#[derive(Debug, Args, Serialize)]
pub struct WickExpandArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,
    /// JSON file `{"vectors": [[…], …]}`; random vectors are used when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Dimension of the random vectors.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Number of random vectors.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args, Serialize)]
pub struct MultiplyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,
    /// JSON file `{"a": <WickElement>, "b": <WickElement>}`; random elements
    /// are used when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Highest chaos of the random elements.
    #[arg(long, default_value_t = 2)]
    pub chaos: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args, Serialize)]
pub struct NormArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,
    /// JSON file holding a WickElement; a random element is used when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 2)]
    pub chaos: usize,
    /// Particle cutoff for an additional operator-norm estimate.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Args, Serialize)]
pub struct DeltaRArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,
    /// JSON file `{"pattern": "LIL" | <InsertionPattern>, "pairing": [[s,t],…],
    /// "f": <FockTensor>, "operators": [<WickElement>, …]}`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Two-dimensional quartic model.
    #[value(name = "phi4-2d")]
    #[serde(rename = "phi4-2d")]
    Phi4_2d,
    /// Three-dimensional quartic model (second-order counterterm).
    #[value(name = "phi4-3d")]
    #[serde(rename = "phi4-3d")]
    Phi4_3d,
}

#[derive(Debug, Args, Serialize)]
pub struct CountertermArgs {
    /// Built-in configuration family.
    #[arg(long, value_enum, default_value = "phi4-3d")]
    pub model: Model,
    /// JSON file with a list of configurations, overriding `--model`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for qfock::qsde::Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Left => qfock::qsde::Side::Left,
            SideArg::Right => qfock::qsde::Side::Right,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct LevyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,
    /// Number of grid cells on [0, horizon].
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub s: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, value_enum, default_value = "left")]
    pub side: SideArg,
    /// Weight of the diagonal cells of the area kernel.
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ChenArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Times `s,u,t`; every grid triple is checked when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub times: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "left")]
    pub side: SideArg,
    #[arg(long, default_value_t = 0.5)]
    pub c: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BphzArgs {
    /// `quartic` or `triangle`.
    #[arg(long, default_value = "quartic")]
    pub mollifier: String,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ItoArgs {
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub q: f64,
    /// Comma-separated cell counts.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    pub grid: Vec<usize>,
    /// Time at which the step is taken.
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// `all` or a comma-separated list of suite names.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Comma-separated deformation parameters.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.9,-0.5,0,0.5,0.9")]
    pub q_grid: Vec<f64>,
    /// One-particle dimension of the random instances.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Highest chaos of the random Wick elements.
    #[arg(long, default_value_t = 2)]
    pub chaos: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
}
