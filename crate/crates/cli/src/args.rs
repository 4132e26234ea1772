use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use odt_core::variants::RankStrategy;

#[derive(Debug, Parser)]
#[command(name = "odt", version, about = "Mine origin-destination-time flow patterns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic graph and trips table.
    Synth(SynthArgs),
    /// Mine patterns and write them out.
    Mine(MineArgs),
    /// Compare an exact miner against the brute-force oracle.
    Verify(VerifyArgs),
    /// Run a parameter sweep and report one CSV row per point.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Baseline,
    Av,
    Avfc,
    Avfcin,
    Opt,
    Bounded,
    Constrained,
    Rank,
    Approx,
    Wapprox,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Baseline => "baseline",
            Algo::Av => "av",
            Algo::Avfc => "avfc",
            Algo::Avfcin => "avfcin",
            Algo::Opt => "opt",
            Algo::Bounded => "bounded",
            Algo::Constrained => "constrained",
            Algo::Rank => "rank",
            Algo::Approx => "approx",
            Algo::Wapprox => "wapprox",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

/// Where the instance comes from: files or a synthetic spec.
#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Edge-list file (`a b` per line).
    #[arg(long, requires = "trips", conflicts_with = "synth")]
    pub graph: Option<PathBuf>,
    /// Trips CSV with `origin,dest,time|timeslot[,flow]` columns.
    #[arg(long, requires = "graph")]
    pub trips: Option<PathBuf>,
    /// Generate the instance instead: `grid:WxH`, `path:N` or `random:N:P`.
    #[arg(long)]
    pub synth: Option<String>,
    /// Non-zero cell density for `--synth`.
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    /// Number of slots when the trips use slot indices (and for `--synth`).
    #[arg(long)]
    pub slots: Option<u32>,
    /// Slot width in minutes when the trips carry clock times.
    #[arg(long, default_value_t = 30)]
    pub slot_width: u32,
    /// Keep only trips whose `period` column equals this label.
    #[arg(long)]
    pub period: Option<String>,
    /// Seed for synthetic instances and randomized miners.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// `grid:WxH`, `path:N` or `random:N:P`.
    #[arg(long)]
    pub kind: String,
    #[arg(long, default_value_t = 48)]
    pub slots: u32,
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    /// `zipf:S:MAX` or `uniform:LO:HI`.
    #[arg(long, default_value = "zipf:1.2:100")]
    pub flows: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving `graph.txt` and `trips.csv`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Thresholds, restrictions and algorithm knobs shared by `mine` and `verify`.
#[derive(Debug, Clone, Args)]
pub struct MiningArgs {
    #[arg(long, value_enum, default_value = "opt")]
    pub algo: Algo,
    /// Fraction of non-zero atomic triples that become atomic patterns.
    #[arg(long)]
    pub sa: f64,
    /// Minimum ratio of atomic patterns inside a pattern.
    #[arg(long, conflicts_with = "top_k")]
    pub sr: Option<f64>,
    /// Size bounds `BO,BD,BT`.
    #[arg(long, value_parser = parse_triple)]
    pub bounds: Option<(usize, usize, usize)>,
    /// File listing origin-domain region names, one per line.
    #[arg(long)]
    pub origins: Option<PathBuf>,
    /// File listing destination-domain region names, one per line.
    #[arg(long)]
    pub dests: Option<PathBuf>,
    /// Inclusive slot range `A,B` of the time domain.
    #[arg(long, value_parser = parse_pair)]
    pub timerange: Option<(u32, u32)>,
    /// Rank atomic patterns among domain triples only.
    #[arg(long)]
    pub rescope_sa: bool,
    /// Patterns kept per level by the ranked miner.
    #[arg(long, visible_alias = "k")]
    pub top_k: Option<usize>,
    /// Highest level explored by the ranked miner.
    #[arg(long)]
    pub maxl: Option<usize>,
    /// `baserank`, `baseoptrank` or `optrank`.
    #[arg(long, default_value = "optrank")]
    pub rank_strategy: RankStrategy,
    /// Fixed sizes `SO,SD,ST` for the approximate miners.
    #[arg(long, value_parser = parse_triple)]
    pub sizes: Option<(usize, usize, usize)>,
    /// Sample or candidate budget `M` for the approximate miners.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Worker threads; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Time limit in seconds; exceeding it exits with status 3.
    #[arg(long)]
    pub timeout: Option<u64>,
    /// Report generation and counting times separately.
    #[arg(long)]
    pub instrument: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub mining: MiningArgs,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub mining: MiningArgs,
    /// Drop one atomic pattern before mining (negative control).
    #[arg(long, hide = true)]
    pub corrupt_atomic: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "baseline,opt")]
    pub algos: Vec<Algo>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub sa: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub sr: Vec<f64>,
    /// Size bounds for `bounded`, repeatable: `--bounds 2,2,2 --bounds 3,3,3`.
    #[arg(long, value_parser = parse_triple)]
    pub bounds: Vec<(usize, usize, usize)>,
    #[arg(long)]
    pub origins: Option<PathBuf>,
    #[arg(long)]
    pub dests: Option<PathBuf>,
    #[arg(long, value_parser = parse_pair)]
    pub timerange: Option<(u32, u32)>,
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub k: Vec<usize>,
    /// Highest level explored by the ranked miner.
    #[arg(long, default_value_t = 8)]
    pub maxl: usize,
    #[arg(long, value_delimiter = ',', default_value = "optrank")]
    pub rank_strategy: Vec<RankStrategy>,
    /// Fixed sizes for the approximate miners, repeatable.
    #[arg(long, value_parser = parse_triple)]
    pub sizes: Vec<(usize, usize, usize)>,
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    pub samples: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Per-point time limit in seconds.
    #[arg(long, default_value_t = 180)]
    pub timeout: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_triple(s: &str) -> Result<(usize, usize, usize), String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(format!("expected three comma-separated numbers, got `{s}`")),
    }
}

fn parse_pair(s: &str) -> Result<(u32, u32), String> {
    let v: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b] if a <= b => Ok((a, b)),
        [_, _] => Err(format!("range `{s}` is reversed")),
        _ => Err(format!("expected two comma-separated numbers, got `{s}`")),
    }
}
