use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xorcount_core::oracle::SOLVER_ENV;

#[derive(Parser, Debug, Serialize)]
#[command(name = "xorcount", version, about = "Approximate model counting with random parity constraints")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GlobalArgs {
    /// Print the JSON report on standard output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Master seed; drawn from system entropy and echoed when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for oracle calls (results do not depend on it).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub jobs: Option<usize>,
    /// Exit with status 3 when a timeout weakened the guarantee.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Include wall-clock phase timings in the JSON report.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub timings: bool,
    #[arg(long, global = true, value_enum, default_value_t = OracleKind::Internal)]
    pub oracle: OracleKind,
    /// External solver: a program, optionally followed by an argument
    /// template using `{cap}` and `{file}`.
    #[arg(long, global = true, env = SOLVER_ENV)]
    pub solver_cmd: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = EncodingKind::Native)]
    pub xor_encoding: EncodingKind,
    #[arg(long, global = true, default_value_t = 3)]
    pub chunk_size: usize,
    /// Seconds allowed per oracle call.
    #[arg(long, global = true)]
    pub per_call_timeout: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Internal,
    External,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    Native,
    Chunked,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Dense,
    Sparse,
    Subcube,
    Ldpc,
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FamilyArgs {
    #[arg(long, value_enum, default_value_t = FamilyKind::Dense)]
    pub family: FamilyKind,
    /// Entry probability of the sparse family.
    #[arg(long, default_value_t = 0.25)]
    pub p: f64,
    /// Column degree of the LDPC family.
    #[arg(long, default_value_t = 3)]
    pub l: usize,
    /// Keep repeated LDPC sockets (reduced mod 2) instead of rejecting them.
    #[arg(long)]
    pub multigraph: bool,
    /// Allow LDPC column degree below 3.
    #[arg(long)]
    pub allow_low_degree: bool,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Estimate the number of models within a factor (1 +- delta).
    Count(CountArgs),
    /// Test or improve a lower bound on log2 of the model count.
    Lower(LowerArgs),
    /// Tabulate the Boost bound of LDPC ensembles.
    BoostTable(BoostTableArgs),
    /// Estimate Boost for a witness set by sampling (or exactly, dense only).
    EstimateBoost(EstimateBoostArgs),
    /// Sample a parity system and print it as x-lines.
    GenXor(GenXorArgs),
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CountArgs {
    #[arg(long)]
    pub cnf: PathBuf,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub theta: f64,
    /// Known lower bound L on the model count.
    #[arg(long, default_value_t = 0.0)]
    pub lower_bound: f64,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// `auto`, or a proven upper bound on Boost.
    #[arg(long, default_value = "auto")]
    pub boost: String,
    /// Run with an unproven Boost value (any family); marks the result heuristic.
    #[arg(long)]
    pub assume_boost: Option<f64>,
    /// Use nested sample sets.
    #[arg(long)]
    pub nested: bool,
    /// Allow nesting prefixes of non-dense systems.
    #[arg(long)]
    pub heuristic_nested: bool,
    /// Nested-mode failure parameter s (default 1/theta).
    #[arg(long)]
    pub s: Option<f64>,
    /// Override the iteration count per level; marks the result heuristic.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Print the resolved constants and stop.
    #[arg(long)]
    pub plan: bool,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LowerArgs {
    #[arg(long)]
    pub cnf: PathBuf,
    /// Decide whether the model count is at least 2^i.
    #[arg(long, conflicts_with = "augment", required_unless_present = "augment")]
    pub i: Option<usize>,
    /// Improve the lower bound `--ell` by doubling-binary search.
    #[arg(long)]
    pub augment: bool,
    #[arg(long, default_value_t = 0, requires = "augment")]
    pub ell: usize,
    #[arg(long, default_value_t = 0.05)]
    pub theta: f64,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Override the iteration count of a single decision.
    #[arg(long, conflicts_with = "augment")]
    pub iterations: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoostTableArgs {
    /// Column degree.
    #[arg(long, default_value_t = 8)]
    pub l: usize,
    /// Ratio of equations to variables, as `num/den`.
    #[arg(long, default_value = "2/5")]
    pub rate: String,
    /// Variable counts: `N`, `A:B:STEP` or a comma list.
    #[arg(long, default_value = "100:200:10")]
    pub n: String,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EstimateBoostArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub i: usize,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Witness assignments as integers (bit v is variable v + 1), comma separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "random_witnesses")]
    pub witnesses: Vec<u64>,
    /// Draw this many distinct random witnesses instead.
    #[arg(long, conflicts_with = "witnesses")]
    pub random_witnesses: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Enumerate every dense system instead of sampling.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GenXorArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub i: usize,
    #[command(flatten)]
    pub family: FamilyArgs,
}
