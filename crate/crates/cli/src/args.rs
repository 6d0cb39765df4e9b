use std::path::PathBuf;
use std::str::FromStr;

use cbe_core::embedding::{Method, DEFAULT_DENSITY};
use cbe_core::evaluation::TimingMethod;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "cbe",
    version,
    about = "Circulant binary embedding experiments"
)]
pub struct Cli {
    /// Worker threads; outputs are identical for any count.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic data matrix.
    GenData(GenDataArgs),
    /// Learn circulant parameters.
    Train(TrainArgs),
    /// Encode a data matrix into binary codes.
    Encode(EncodeArgs),
    /// Recall@m of Hamming ranking against exact neighbors.
    EvalRecall(EvalRecallArgs),
    /// Mean and variance of the normalized Hamming distance of a fixed pair.
    EvalAngle(EvalAngleArgs),
    /// Per-point encode time against dimension.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    Gaussian,
    Clustered,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub kind: DataKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cluster count for `--kind clustered`.
    #[arg(long, default_value_t = 10)]
    pub clusters: usize,
    /// Within-cluster spread for `--kind clustered`.
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,
    /// Extra rows from the same distribution, written to `--queries-out`.
    #[arg(long, default_value_t = 0, requires = "queries_out")]
    pub n_queries: usize,
    #[arg(long)]
    pub queries_out: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Radial,
    Gd,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Only `cbe-opt` is trainable.
    #[arg(long, default_value = "cbe-opt", value_parser = parse_method)]
    pub method: Method,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// Pair file with `[similar]` and `[dissimilar]` sections.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Solver::Radial)]
    pub solver: Solver,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Objective trace CSV; defaults to `<out>.trace.csv`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// `off` or `block=B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precondition {
    Off,
    Block(usize),
}

impl FromStr for Precondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "off" {
            return Ok(Precondition::Off);
        }
        s.strip_prefix("block=")
            .and_then(|b| b.parse().ok())
            .filter(|&b: &usize| b > 0)
            .map(Precondition::Block)
            .ok_or_else(|| format!("expected `off` or `block=B` with B > 0, got {s:?}"))
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Required with `--seed`; must match the file with `--params`.
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(long, conflicts_with = "seed")]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Code bits; required with `--seed`.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value = "off")]
    pub precondition: Precondition,
    /// FJLT nonzero density.
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    pub density: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalRecallArgs {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub codes_db: PathBuf,
    #[arg(long)]
    pub codes_q: PathBuf,
    /// Ground-truth neighbors per query.
    #[arg(long, default_value_t = 10)]
    pub g: usize,
    #[arg(long, default_value_t = 100)]
    pub m_max: usize,
    /// Value of the `method` column.
    #[arg(long, default_value = "codes")]
    pub label: String,
    /// CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalAngleArgs {
    /// Angles in radians, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub theta: Vec<f64>,
    #[arg(long)]
    pub d: usize,
    /// Code lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Dimensions (powers of two), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub d_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "full,bilinear,circulant,fjlt", value_parser = parse_timing_method)]
    pub methods: Vec<TimingMethod>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Largest dense matrix to allocate, in MiB.
    #[arg(long, default_value_t = 1024)]
    pub dense_budget_mib: usize,
    /// Report dense cells over budget as `oom` instead of timing a row subset.
    #[arg(long)]
    pub no_extrapolate: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: cbe_core::CbeError| e.to_string())
}

fn parse_timing_method(s: &str) -> Result<TimingMethod, String> {
    s.parse().map_err(|e: cbe_core::CbeError| e.to_string())
}
