//! Command-line surface. Every argument struct is also the serialized run
//! configuration embedded in reports.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tenspart::partition::Direction;
use tenspart::{Execution, Normalization, SolverConfig, ThresholdMode};

#[derive(Debug, Parser)]
#[command(name = "tenspart", version, about = "Sparse 3-tensor partitioning and expansion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a coordinate file or a record log and write a canonical tensor.
    Ingest(IngestArgs),
    /// Normalize the frontal slices of a tensor.
    Normalize(NormalizeArgs),
    /// Best low multilinear rank approximation.
    Approx(ApproxArgs),
    /// Reorder, split and measure block norms.
    Partition(PartitionArgs),
    /// Rank-(2,2,1) expansion into salient subgraphs.
    Expand(ExpandArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Normalize(_) => "normalize",
            Command::Approx(_) => "approx",
            Command::Partition(_) => "partition",
            Command::Expand(_) => "expand",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    Tns,
    LogCsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeKind {
    Adjacency,
    Frobenius,
    None,
}

impl From<NormalizeKind> for Normalization {
    fn from(k: NormalizeKind) -> Self {
        match k {
            NormalizeKind::Adjacency => Normalization::Adjacency,
            NormalizeKind::Frobenius => Normalization::Frobenius,
            NormalizeKind::None => Normalization::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdArg {
    Positive,
    Absolute,
}

impl From<ThresholdArg> for ThresholdMode {
    fn from(t: ThresholdArg) -> Self {
        match t {
            ThresholdArg::Positive => ThresholdMode::Positive,
            ThresholdArg::Absolute => ThresholdMode::Absolute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Nonincreasing,
    Nondecreasing,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Nonincreasing => Direction::Nonincreasing,
            DirectionArg::Nondecreasing => Direction::Nondecreasing,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    pub input: PathBuf,
    /// Defaults to log-csv for `.csv` files and tns otherwise.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Records per frontal slice (log-csv only).
    #[arg(long)]
    pub bin_size: Option<usize>,
    /// Keep only ids seen both as source and as destination (log-csv only).
    #[arg(long)]
    pub restrict: bool,
    /// Override the extents (tns only).
    #[arg(long, num_args = 3, value_names = ["L", "M", "N"])]
    pub dims: Option<Vec<usize>>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NormalizeArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub normalize: NormalizeKind,
    /// Treat slices as symmetric adjacency matrices.
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Options shared by every solver-backed command.
#[derive(Debug, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "none")]
    pub normalize: NormalizeKind,
    /// Relative change of the core norm at which iteration stops.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Starts in total: the HOSVD start plus random ones.
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Use the thread pool. Results differ from the sequential path only by rounding.
    #[arg(long)]
    pub parallel: bool,
}

impl SolverArgs {
    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    pub fn config(&self, symmetric: bool) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iter,
            rel_tol: self.tol,
            seed: self.seed,
            num_restarts: self.restarts,
            symmetric,
            execution: self.execution(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ApproxArgs {
    pub input: PathBuf,
    #[arg(long, num_args = 3, value_names = ["R1", "R2", "R3"], default_values_t = [2, 2, 2])]
    pub rank: Vec<usize>,
    /// Shared factor for modes 1 and 2; the slices must be symmetric.
    #[arg(long)]
    pub symmetric: bool,
    /// Solve a non-symmetric problem through its symmetric embedding.
    #[arg(long, conflicts_with = "symmetric")]
    pub via_embedding: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PartitionArgs {
    pub input: PathBuf,
    #[arg(long, num_args = 3, value_names = ["R1", "R2", "R3"], default_values_t = [2, 2, 2])]
    pub rank: Vec<usize>,
    #[arg(long)]
    pub symmetric: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Mode-1 labels, one per line. Also used for mode 2 unless `--col-labels` is given.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub col_labels: Option<PathBuf>,
    #[arg(long)]
    pub slice_labels: Option<PathBuf>,
    /// Side of the corner blocks; defaults to a tenth of the smaller extent.
    #[arg(long)]
    pub corner_width: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    #[arg(long, value_enum, default_value = "nonincreasing")]
    pub direction: DirectionArg,
    /// Index-range file describing a subtensor to partition again. Repeatable.
    #[arg(long)]
    pub recurse: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExpandArgs {
    pub input: PathBuf,
    /// Relative threshold for the term matrices, in [0, 1]. No default on purpose.
    #[arg(long)]
    pub theta: f64,
    #[arg(long, value_enum, default_value = "positive")]
    pub threshold_mode: ThresholdArg,
    #[arg(long, default_value_t = 1)]
    pub terms: usize,
    /// Margin for the block-structure flag.
    #[arg(long, default_value_t = 0.05)]
    pub structure_margin: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}
