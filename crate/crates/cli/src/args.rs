use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curricula::corpus::Split;
use curricula::difficulty::{Aggregation, ArgmaxMode};
use curricula::importance::ImportanceMethod;
use curricula::schedule::{CompetenceShape, CurriculumKind};

/// Curriculum learning driven by linguistic complexity indices.
///
/// Every flag may also be set in a TOML file passed with --config, either at
/// top level or under a [<command>] table, using the flag name as key
/// (`batch-size = 32` or `batch_size = 32`). Flags given on the command line
/// win over the file, and the file wins over built-in defaults.
#[derive(Debug, Parser)]
#[command(name = "curricula", version)]
pub struct Cli {
    /// Seed for every random choice in the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// TOML file supplying flag values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for every output file.
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the native lexical indices of a dataset.
    Extract(ExtractArgs),
    /// Train a classifier, optionally under a curriculum.
    Train(TrainArgs),
    /// Difficulty-balanced accuracy of a trained checkpoint.
    Eval(EvalArgs),
    /// Reduce an index set by accuracy trend or by correlation clusters.
    Filter(FilterArgs),
    /// Stage-wise summaries of an importance trajectory.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Dataset, JSON lines.
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,

    /// Ranked word-frequency list (most frequent first); enables the
    /// sophistication indices.
    #[arg(long, value_name = "FILE")]
    pub freq: Option<PathBuf>,

    /// Words at the top of the frequency list treated as common.
    #[arg(long, default_value_t = curricula::lexical::DEFAULT_SOPHISTICATION_CUTOFF)]
    pub freq_cutoff: usize,

    /// Require the sophistication indices (fails without --freq).
    #[arg(long)]
    pub sophistication: bool,

    /// Tagged tokens, JSON lines; enables the part-of-speech indices.
    #[arg(long, value_name = "FILE")]
    pub tags: Option<PathBuf>,

    /// Segment length for mean segmental TTR.
    #[arg(long, default_value_t = curricula::lexical::DEFAULT_SEGMENT)]
    pub segment: usize,

    /// Prefix length for the unique-words-in-first-k index.
    #[arg(long, default_value_t = curricula::lexical::DEFAULT_FIRST_K)]
    pub first_k: usize,

    /// Output path [default: <out-dir>/indices.csv].
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset, JSON lines.
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,

    /// Index matrix CSV (from `curricula extract` or an external extractor).
    #[arg(long, value_name = "FILE")]
    pub indices: Option<PathBuf>,

    /// Restrict training to the index names listed one per line (from
    /// `curricula filter`).
    #[arg(long, value_name = "FILE")]
    pub keep_indices: Option<PathBuf>,

    /// none, sigmoid, neg-sigmoid, gaussian, sampling, competence or
    /// data-selection.
    #[arg(long, default_value = "none")]
    pub curriculum: CurriculumKind,

    /// Importance estimator: optimization or correlation.
    #[arg(long, default_value = "optimization")]
    pub importance: ImportanceMethod,

    /// L1 strength of the optimization estimator.
    #[arg(long, default_value_t = curricula::importance::DEFAULT_LAMBDA)]
    pub lambda: f64,

    /// Difficulty aggregation: max or weighted.
    #[arg(long, default_value = "max")]
    pub aggregation: Aggregation,

    /// Index choice for max aggregation: signed or absolute.
    #[arg(long, default_value = "signed")]
    pub argmax: ArgmaxMode,

    #[arg(long, default_value_t = 5)]
    pub epochs: usize,

    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,

    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,

    /// Decoupled weight decay.
    #[arg(long, default_value_t = 0.01)]
    pub weight_decay: f64,

    /// Validation (and importance estimation) points per epoch.
    #[arg(long, default_value_t = 2)]
    pub validation_steps: usize,

    /// Shift rate of the sigmoid curricula.
    #[arg(long, default_value_t = curricula::schedule::DEFAULT_BETA)]
    pub beta: f64,

    /// Variance growth of the gaussian curriculum.
    #[arg(long, default_value_t = curricula::schedule::DEFAULT_GAMMA)]
    pub gamma: f64,

    /// Initial competence of the competence curriculum.
    #[arg(long, default_value_t = curricula::schedule::DEFAULT_COMPETENCE_C0)]
    pub competence_c0: f64,

    /// Competence growth: linear or sqrt.
    #[arg(long, default_value = "linear")]
    pub competence_shape: CompetenceShape,

    /// Fraction of training before data selection starts dropping samples.
    #[arg(long, default_value_t = curricula::schedule::DEFAULT_WARMUP)]
    pub warmup: f64,

    /// Append the standardized index row to the text features.
    #[arg(long)]
    pub concat_indices: bool,

    /// Width of the hashed token feature block.
    #[arg(long, default_value_t = curricula::model::DEFAULT_HASH_DIM)]
    pub hash_dim: usize,

    /// Record loss traces for validation and test samples too (needed by
    /// `eval --by loss` on those splits).
    #[arg(long)]
    pub trace_all_splits: bool,

    /// Drive the curriculum with the mean per-sample loss from an earlier
    /// run's loss_traces.csv instead of the indices.
    #[arg(long, value_name = "FILE")]
    pub difficulty_from_loss: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DifficultyBy {
    Index,
    Loss,
    Aggregate,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,

    #[arg(long, value_name = "FILE")]
    pub indices: Option<PathBuf>,

    /// Checkpoint [default: <out-dir>/checkpoint.json].
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,

    /// Split to evaluate: train, validation or test.
    #[arg(long, default_value = "test")]
    pub split: Split,

    /// Difficulty source for binning.
    #[arg(long, value_enum)]
    pub by: Option<DifficultyBy>,

    /// Bin by this index (implies --by index).
    #[arg(long, value_name = "NAME")]
    pub by_index: Option<String>,

    /// Loss traces for --by loss [default: <out-dir>/loss_traces.csv].
    #[arg(long, value_name = "FILE")]
    pub traces: Option<PathBuf>,

    /// Importance trajectory for --by aggregate [default: <out-dir>/rho_trajectory.csv].
    #[arg(long, value_name = "FILE")]
    pub rho: Option<PathBuf>,

    #[arg(long, default_value_t = curricula::evaluation::DEFAULT_BINS)]
    pub bins: usize,

    /// Bins with fewer members merge into a neighbour.
    #[arg(long, default_value_t = curricula::evaluation::DEFAULT_MIN_COUNT)]
    pub min_count: usize,

    /// Output path [default: <out-dir>/eval_<split>_<source>.csv].
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterMethod {
    Trend,
    Cluster,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long, value_enum)]
    pub method: Option<FilterMethod>,

    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,

    #[arg(long, value_name = "FILE")]
    pub indices: Option<PathBuf>,

    /// Checkpoint of a run without curriculum, for --method trend
    /// [default: <out-dir>/checkpoint.json].
    #[arg(long, value_name = "FILE")]
    pub baseline: Option<PathBuf>,

    /// Fraction of indices the trend filter keeps.
    #[arg(long, default_value_t = curricula::filtering::DEFAULT_KEEP_FRACTION)]
    pub keep: f64,

    #[arg(long, default_value_t = curricula::evaluation::DEFAULT_BINS)]
    pub bins: usize,

    /// Largest 1 - |r| inside a cluster.
    #[arg(long, default_value_t = curricula::filtering::DEFAULT_CLUSTER_THRESHOLD)]
    pub threshold: f64,

    /// Importance trajectory whose final |rho| picks cluster representatives;
    /// without it the most central member is used.
    #[arg(long, value_name = "FILE")]
    pub rho: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Importance trajectory [default: <out-dir>/rho_trajectory.csv].
    #[arg(long, value_name = "FILE")]
    pub rho: Option<PathBuf>,

    /// Top indices per training stage.
    #[arg(long)]
    pub stages: bool,

    /// Largest stage-to-stage change per index.
    #[arg(long)]
    pub changes: bool,

    /// Cluster indices with similar trajectories.
    #[arg(long)]
    pub clusters: bool,

    #[arg(long, default_value_t = curricula::rho_analysis::DEFAULT_TOP_K)]
    pub top_k: usize,

    /// Largest mean |rho difference| inside a trajectory cluster.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
}
