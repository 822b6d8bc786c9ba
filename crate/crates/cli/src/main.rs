//! `dsrr`: DSRR preprocessing, correlation pruning and VPN / non-VPN
//! classification of flow-feature CSVs.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or schema error, 3 internal error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dsrr_core::classifiers::ModelKind;
use dsrr_core::rescaled_range::{EdgePolicy, TransformMode};

#[derive(Debug, Parser)]
#[command(
    name = "dsrr",
    version,
    about = "DSRR flow-feature preprocessing and VPN traffic classification"
)]
pub struct Cli {
    /// Settings file of `key = value` lines; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply the DSRR transform to every feature column.
    Transform(TransformArgs),
    /// Write Φ_k and Kendall τ matrices and the pruning decisions.
    Correlate(CorrelateArgs),
    /// Fit a model on the training split and save it as JSON.
    Train(TrainArgs),
    /// Score a saved model on a flow CSV.
    Evaluate(EvaluateArgs),
    /// Split, transform, prune, fit and evaluate in one run.
    Pipeline(PipelineArgs),
    /// Generate a synthetic regime-switch flow CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Flow CSV, or a directory whose `*.csv` files are all loaded. Repeatable.
    #[arg(long, short = 'i', required = true, value_name = "PATH")]
    pub input: Vec<PathBuf>,

    /// `iscx` (23 time-based features, label `class1`), `auto` (every column
    /// except the label and a `timestamp` column) or a schema file.
    #[arg(long, value_name = "iscx|auto|FILE")]
    pub schema: Option<String>,

    /// Keep only files whose name carries this flow timeout, e.g. 60 for `*60s*`.
    #[arg(long, value_name = "SECONDS")]
    pub duration: Option<u32>,
}

#[derive(Debug, Args)]
pub struct DsrrArgs {
    /// Block length w.
    #[arg(long, short = 'w')]
    pub window: Option<usize>,

    /// Prefix step a.
    #[arg(long, short = 'a')]
    pub step: Option<usize>,

    /// Handling of a trailing block shorter than w.
    #[arg(long)]
    pub edge: Option<EdgePolicy>,

    /// Replace features, or append `dsrr_*` columns next to them.
    #[arg(long)]
    pub mode: Option<TransformMode>,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Drop one feature of every pair with |τ| above this value.
    #[arg(long)]
    pub tau_threshold: Option<f64>,

    /// Quantile bins per variable for Φ_k.
    #[arg(long)]
    pub bins: Option<usize>,

    /// Do not drop pairs with Φ_k = 1.
    #[arg(long)]
    pub keep_phik_one: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_model_kind)]
    pub model: Option<ModelKind>,

    /// Neighbours for kNN.
    #[arg(long)]
    pub k: Option<usize>,

    /// Trees in the random forest.
    #[arg(long)]
    pub trees: Option<usize>,

    #[arg(long)]
    pub max_depth: Option<usize>,

    #[arg(long)]
    pub min_leaf: Option<usize>,

    /// Seeds the split and the model.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub train_fraction: Option<f64>,

    /// Transform train and test rows as separate series.
    #[arg(long)]
    pub transform_after_split: bool,

    /// Skip correlation pruning.
    #[arg(long)]
    pub no_prune: bool,
}

fn parse_model_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: dsrr_core::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub dsrr: DsrrArgs,
    /// Output CSV.
    #[arg(long, short = 'o')]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub prune: PruneArgs,
    /// DSRR-transform the features before correlating them.
    #[arg(long)]
    pub transform: bool,
    #[command(flatten)]
    pub dsrr: DsrrArgs,
    /// Output directory for `correlation.json`, `phi_k.csv` and `kendall_tau.csv`.
    #[arg(long, short = 'o')]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub dsrr: DsrrArgs,
    #[command(flatten)]
    pub prune: PruneArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Train on the untransformed features.
    #[arg(long)]
    pub raw: bool,
    /// Output model JSON.
    #[arg(long, short = 'o')]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RowSet {
    /// Every row of the input.
    All,
    /// The test rows of the split stored in the model.
    Test,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Model JSON written by `train`.
    #[arg(long, value_name = "FILE")]
    pub model_file: PathBuf,
    #[arg(long, value_enum, default_value_t = RowSet::All)]
    pub rows: RowSet,
    /// Metrics JSON output.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub dsrr: DsrrArgs,
    #[command(flatten)]
    pub prune: PruneArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also evaluate the model on the untransformed features.
    #[arg(long)]
    pub baseline: bool,
    /// Output directory for `metrics.json` and `metrics.csv`.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 40)]
    pub blocks: usize,
    #[arg(long, default_value_t = 50)]
    pub block_len: usize,
    #[arg(long, default_value_t = 4)]
    pub features: usize,
    /// Offset added at the start of every VPN block.
    #[arg(long, default_value_t = 10.0)]
    pub burst: f64,
    #[arg(long, default_value_t = 5)]
    pub burst_len: usize,
    /// Noise variance of both classes.
    #[arg(long, default_value_t = 1.0)]
    pub variance: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output CSV.
    #[arg(long, short = 'o')]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<dsrr_core::Error> for CliError {
    fn from(e: dsrr_core::Error) -> Self {
        use dsrr_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Parameter(_) => CliError::Usage(msg),
            E::Estimation(_) => CliError::Internal(msg),
            E::Input(_)
            | E::Schema(_)
            | E::Data(_)
            | E::Split(_)
            | E::Model(_)
            | E::Io(_)
            | E::Csv(_)
            | E::Json(_) => CliError::Data(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| commands::run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("dsrr: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(3),
    }
}
