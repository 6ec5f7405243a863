use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use privsearch::bounds::Strategy;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "privsearch",
    version,
    about = "Download bounds and protocol experiments for private search"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalized converse bound of exact search against K, one row per (K, N).
    Figure1(Figure1Args),
    /// Converse bound for one family and server count.
    Bound(BoundArgs),
    /// Per-step entropy drop profile along a message ordering.
    Suffcond(SuffcondArgs),
    /// Exhaustive scan of arc triples in the circular family.
    Prop5(Prop5Args),
    /// Seeded sessions of the N-server XOR scheme.
    ProtocolRun(ProtocolRunArgs),
    /// Statistical audit of the query distribution seen by each server.
    ProtocolAudit(ProtocolAuditArgs),
    /// Writes a builtin family as a document accepted by `--family`.
    FamilyExport(FamilyExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Exact,
    Disjoint,
    Nested,
    Circular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    Exhaustive,
    Greedy,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Exhaustive => Strategy::Exhaustive,
            StrategyArg::Greedy => Strategy::Greedy,
        }
    }
}

/// Builtin family selected by kind and size, or a document on disk.
#[derive(Debug, Clone, Args, Serialize)]
pub struct FamilySource {
    #[arg(long, value_enum, required_unless_present = "family")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    /// Alphabet size.
    #[arg(long = "K", conflicts_with = "family")]
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Pattern size for disjoint and nested families.
    #[arg(long = "M", conflicts_with = "family")]
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Number of nested patterns; defaults to the largest allowed.
    #[arg(long, conflicts_with = "family")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Family document, as written by `family-export`.
    #[arg(long, conflicts_with = "kind")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file, written atomically; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Figure1Args {
    /// Largest alphabet size.
    #[arg(long = "K", default_value_t = 100)]
    #[serde(rename = "K_max")]
    pub k_max: usize,
    #[arg(long = "N", value_delimiter = ',', default_value = "2,3,4,5")]
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilySource,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: usize,
    /// Ordering search; exhaustive up to 10 messages, greedy beyond, when absent.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SuffcondArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilySource,
    /// Comma-separated message indices; the greedy ordering when absent.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<usize>>,
    /// Number of steps to report.
    #[arg(long)]
    pub horizon: usize,
    /// Server count used to pick the greedy ordering.
    #[arg(long = "N", default_value_t = 2)]
    #[serde(rename = "N")]
    pub n: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Prop5Args {
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: usize,
    /// Scan every ordered triple instead of fixing the first arc.
    #[arg(long)]
    pub unreduced: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProtocolRunArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilySource,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: usize,
    /// Record count, which is also the message length in bits.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: usize,
    #[arg(long)]
    pub seed: u64,
    /// Run one session for this message; otherwise `--trials` sessions with random messages.
    #[arg(long, conflicts_with = "trials")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Codec failure budget per message.
    #[arg(long, default_value_t = 1e-3)]
    pub target_failure: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProtocolAuditArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilySource,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: usize,
    /// Sessions per audited message.
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1_000)]
    pub bijection_samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FamilyExportArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub family: FamilySource,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}
