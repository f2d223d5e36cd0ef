use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use filtra_core::Interval;
use serde::{Serialize, Serializer};

use crate::formats::parse_interval_union;

#[derive(Debug, Parser)]
#[command(name = "filtra", version, about = "Filtrations, measurability and adapted-policy checks on finite path spaces")]
pub struct Cli {
    /// Output format. Each subcommand has its own default.
    #[arg(long, global = true, env = "FILTRA_FORMAT", value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the members of stage t of the natural filtration.
    Enumerate(EnumerateArgs),
    /// Check the σ-algebra axioms of every stage and nesting across stages.
    Verify(VerifyArgs),
    /// Check whether a variable or decision rule is F_t-measurable.
    Measurable(MeasurableArgs),
    /// Evaluate, optimize or leak-check trading policies on the lattice.
    #[command(subcommand)]
    Policy(PolicyCommand),
    /// Emit cone figure data for one simulated continuous path.
    Cone(ConeArgs),
    /// Sample lattice price paths.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpaceArgs {
    /// Comma-separated single-character symbols, in index order.
    #[arg(long, value_delimiter = ',', default_value = "u,d")]
    pub alphabet: Vec<char>,
    #[arg(short = 'T', long = "horizon", default_value_t = 3)]
    pub horizon: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EnumerateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    /// Stage index.
    #[arg(long = "t")]
    pub t: usize,
    /// List members even when there are more than --cap of them.
    #[arg(long)]
    pub force: bool,
    /// Largest member count listed without --force.
    #[arg(long, default_value_t = 16)]
    pub cap: u128,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    /// JSON array of stages, each {"atoms": [...]} or {"members": [...]}.
    /// Defaults to the natural filtration.
    #[arg(long)]
    pub stages: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LatticeArgs {
    #[arg(long, default_value_t = 100.0)]
    pub s0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub u: f64,
    #[arg(long, default_value_t = 5.0)]
    pub d: f64,
    #[arg(short = 'T', long = "horizon", default_value_t = 3)]
    pub horizon: usize,
    /// Up-move probability at every step.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MeasurableArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lattice: LatticeArgs,
    /// Stage of the natural filtration to test against.
    #[arg(long = "t")]
    pub t: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: Target,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct Target {
    /// The price S_k.
    #[arg(long, value_name = "K")]
    pub price: Option<usize>,
    /// JSON file {"values": [...]} in path order.
    #[arg(long, value_name = "FILE")]
    pub variable: Option<PathBuf>,
    /// JSON decision table; its time-t action is tested.
    #[arg(long, value_name = "FILE")]
    pub policy: Option<PathBuf>,
    #[arg(long, value_name = "C", allow_hyphen_values = true)]
    pub constant: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum PolicyCommand {
    /// Expected discounted reward, exact or by Monte Carlo.
    Eval(PolicyArgs),
    /// Check that decisions are constant on the atoms of F_t.
    Leak(PolicyArgs),
    /// Backward-induction optimum over adapted policies.
    Optimal(PolicyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKindArg {
    AlwaysLong,
    AlwaysFlat,
    Optimal,
    Prescient,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PolicyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lattice: LatticeArgs,
    /// Discount factor in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, value_enum, default_value = "optimal")]
    pub kind: PolicyKindArg,
    /// JSON decision table; overrides --kind.
    #[arg(long, value_name = "FILE")]
    pub table: Option<PathBuf>,
    /// Estimate by Monte Carlo with this many paths instead of exactly.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConeArgs {
    #[arg(long, default_value_t = 332.0)]
    pub s0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub u: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    #[arg(short = 'T', long = "horizon", default_value_t = 100)]
    pub horizon: usize,
    /// Event set as t=K:[a,b) with pieces joined by ∪ or |. Repeatable.
    #[arg(long = "event", value_parser = parse_event_spec)]
    pub events: Vec<EventSpec>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = 10)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A parsed `--event` flag; echoes back as the text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub t: usize,
    pub pieces: Vec<Interval>,
    pub source: String,
}

impl Serialize for EventSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

pub fn parse_event_spec(text: &str) -> Result<EventSpec, String> {
    let (lhs, rhs) = text
        .split_once(':')
        .ok_or_else(|| format!("expected t=K:[a,b) but found {text:?}"))?;
    let t = lhs
        .trim()
        .strip_prefix("t=")
        .and_then(|k| k.trim().parse().ok())
        .ok_or_else(|| format!("expected t=K before ':' in {text:?}"))?;
    Ok(EventSpec {
        t,
        pieces: parse_interval_union(rhs)?,
        source: text.to_string(),
    })
}
