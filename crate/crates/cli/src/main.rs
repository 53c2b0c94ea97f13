//! `mifs`: mutual-information feature selection from the command line.
//!
//! Exit codes: 0 on success, 1 on data or estimation errors, 2 on usage
//! errors.

mod commands;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

impl From<mifs_core::Error> for CliError {
    fn from(e: mifs_core::Error) -> Self {
        match e {
            mifs_core::Error::MissingTarget(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "mifs",
    version,
    about = "k-NN mutual information feature selection"
)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate MI between feature subsets and the target.
    EstimateMi(EstimateMiArgs),
    /// Choose the estimator's K by resampling.
    SelectK(SelectKArgs),
    /// Greedy feature selection with a permutation stopping test.
    Select(SelectArgs),
    /// Cluster features by their false-neighbor profiles.
    Cluster(ClusterArgs),
    /// Write a synthetic Friedman regression dataset as CSV.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Input CSV file.
    #[arg(long)]
    pub input: PathBuf,
    /// Target column, by header name or 1-based position (default: last).
    #[arg(long)]
    pub target: Option<String>,
    /// The input has no header line; features are named x1..xM.
    #[arg(long)]
    pub no_header: bool,
    /// Standardize features and target to zero mean, unit variance (default).
    #[arg(long, overrides_with = "no_standardize")]
    pub standardize: bool,
    /// Use the raw values.
    #[arg(long, overrides_with = "standardize")]
    pub no_standardize: bool,
    /// Add negligible noise to break ties between duplicated values.
    #[arg(long)]
    pub jitter: bool,
    /// Seed for every random choice made by the command.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the JSON report (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateMiArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated feature names forming one subset; repeat for several
    /// subsets. Default: every feature on its own.
    #[arg(long)]
    pub features: Vec<String>,
    /// Number of neighbors.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    /// Report bits instead of nats.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Args, Debug)]
pub struct KGridArgs {
    /// Smallest K of the grid.
    #[arg(long, default_value_t = 2)]
    pub k_min: usize,
    /// Largest K of the grid (default: min(30, N/4)).
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 20)]
    pub folds: usize,
    /// How per-feature t curves are combined.
    #[arg(long, value_enum, default_value_t = AggregationArg::Max)]
    pub aggregation: AggregationArg,
}

#[derive(Args, Debug)]
pub struct SelectKArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub grid: KGridArgs,
    /// Comma-separated candidate features (default: all).
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    /// Also write the (feature, K, t_K) curves to this CSV file.
    #[arg(long)]
    pub t_csv: Option<PathBuf>,
    /// Report MI summaries in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Forward)]
    pub method: MethodArg,
    /// Number of neighbors; without it K is chosen automatically.
    #[arg(long, conflicts_with = "auto_k")]
    pub k: Option<usize>,
    /// Choose K by resampling before selecting (the default without --k).
    #[arg(long)]
    pub auto_k: bool,
    #[command(flatten)]
    pub grid: KGridArgs,
    /// Permutations per stopping test.
    #[arg(long, default_value_t = 100)]
    pub permutations: usize,
    /// Significance threshold of the stopping test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Stop at the first decrease of the estimate instead of testing.
    #[arg(long)]
    pub legacy_stop: bool,
    /// Cap on the number of selected features.
    #[arg(long)]
    pub max_size: Option<usize>,
    /// Average this many leave-one-fold-out estimates inside the stopping test.
    #[arg(long)]
    pub cv: Option<usize>,
    /// Report MI values in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("stop").required(true).args(["clusters", "min_similarity"]))]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Merge until this many clusters remain.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Merge while the best similarity is at least this value.
    #[arg(long, allow_negative_numbers = true)]
    pub min_similarity: Option<f64>,
    /// Ignore the target and use plain column correlation.
    #[arg(long)]
    pub unsupervised: bool,
    /// How a merged cluster's representative is elected.
    #[arg(long, value_enum, default_value_t = RuleArg::MaxMi)]
    pub rule: RuleArg,
    /// Number of neighbors for the MI used in representative election.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    /// Also write the merge list to this CSV file.
    #[arg(long)]
    pub merges_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Number of samples.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum AggregationArg {
    Max,
    Mean,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum MethodArg {
    Forward,
    ForwardBackward,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum RuleArg {
    MaxMi,
    MemberAverage,
}

fn configure_threads(threads: Option<u16>) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Data(format!("cannot start thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::EstimateMi(a) => commands::estimate_mi(&a, argv),
        Command::SelectK(a) => commands::select_k(&a, argv),
        Command::Select(a) => commands::select(&a, argv),
        Command::Cluster(a) => commands::cluster(&a, argv),
        Command::Synth(a) => commands::synth(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.message().replace('\n', " ");
            eprintln!("mifs: error: {line}");
            ExitCode::from(e.exit_code())
        }
    }
}
