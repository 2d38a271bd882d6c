use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nmvec::{Algorithm, DType, SparsityPattern};

#[derive(Debug, Parser)]
#[command(name = "nmvec", version, about = "N:M structured-sparse matmul kernels on a vector-machine model")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file whose entries act as flags placed before the command line's own
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random dense matrix (or a pruned sparse one with --pattern)
    Gen(GenArgs),
    /// Prune a dense matrix (SSDM or CSV) to n:m and write an SSNM file
    Prune(PruneArgs),
    /// Describe a matrix file
    Info(InfoArgs),
    /// Run one kernel and report counters
    Run(RunArgs),
    /// Run a suite of specs and write a CSV table
    Bench(BenchArgs),
    /// Run a spec split across several cores
    Multicore(MulticoreArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl OnOff {
    pub fn on(self) -> bool {
        self == OnOff::On
    }
}

#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    /// Preset workload name (see `config/workloads.txt`); overrides --rows/--k/--cols
    #[arg(long)]
    pub workload: Option<String>,
    #[arg(long, default_value_t = 128)]
    pub rows: usize,
    /// Inner dimension (columns of A, rows of B); padded up to whole blocks
    #[arg(long, default_value_t = 128)]
    pub k: usize,
    #[arg(long, default_value_t = 16)]
    pub cols: usize,
    #[arg(long, default_value = "1:4")]
    pub pattern: SparsityPattern,
    #[arg(long, default_value = "i32")]
    pub dtype: DType,
    #[arg(long, default_value_t = 16)]
    pub vl: usize,
    #[arg(long, default_value_t = 64)]
    pub line_bytes: usize,
    #[arg(long, default_value = "alg3s")]
    pub algorithm: Algorithm,
    /// Unroll factors: inner,outer for alg3s-unrolled; outer,mid for alg6-unrolled
    #[arg(long, value_name = "A,B")]
    pub unroll: Option<String>,
    /// Rows of B per register tile (L)
    #[arg(long, default_value_t = 16)]
    pub tile_rows: usize,
    #[arg(long, default_value_t = 16)]
    pub tile_base: usize,
    #[arg(long, value_enum, default_value = "on")]
    pub b_stationary: OnOff,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Cost weights: a profile name (default, traffic) or a key=value file
    #[arg(long, default_value = "default")]
    pub weights: String,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value = "i32")]
    pub dtype: DType,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Prune to this pattern and write SSNM instead of a dense file
    #[arg(long)]
    pub pattern: Option<SparsityPattern>,
    /// Output path; a `.csv` extension writes dense CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Dense SSDM file, or CSV
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub pattern: SparsityPattern,
    #[arg(long)]
    pub out: PathBuf,
    /// Element type for CSV input
    #[arg(long, default_value = "i32")]
    pub dtype: DType,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Compare the output with the scalar reference product
    #[arg(long, value_enum, default_value = "on")]
    pub verify: OnOff,
    /// Write the instruction trace (class, operands, vl per line)
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Suite file: one spec per line as key=value tokens
    #[arg(long)]
    pub suite: PathBuf,
    /// CSV destination (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MulticoreArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Core counts to run, comma separated
    #[arg(long, default_value = "1,2,4,8")]
    pub cores: String,
    #[arg(long, value_enum, default_value = "on")]
    pub verify: OnOff,
}
