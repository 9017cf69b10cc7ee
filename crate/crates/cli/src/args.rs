use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rugguard", version, about = "Rug-pull labeling, leakage-safe features and model evaluation")]
pub struct Cli {
    /// Flat key=value file. Each key names a long flag of the subcommand and
    /// applies unless that flag is given on the command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus of trace files plus ground_truth.csv.
    Simulate(SimulateArgs),
    /// Validate trace files and write them in canonical form.
    Ingest(IngestArgs),
    /// Label every trace Alive or Dead.
    Label(LabelArgs),
    /// Extract features strictly before each project's causal cutoff.
    Extract(ExtractArgs),
    /// Join features with labels and assign the train/test split.
    Split(SplitArgs),
    /// Fit logistic regression on the train split.
    Train(TrainArgs),
    /// Score a model or an external prediction file on the test split.
    Evaluate(EvaluateArgs),
    /// Collect metrics reports into one comparison table.
    Report(ReportArgs),
    /// Run simulate through report end to end.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of projects.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.59)]
    pub rug_fraction: f64,
    /// Market events per hour.
    #[arg(long, default_value_t = 1.5)]
    pub base_tx_rate: f64,
    #[arg(long, default_value_t = 0.8)]
    pub pump_intensity: f64,
    /// Blur the line between the two classes.
    #[arg(long)]
    pub hard_mode: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub gen: GenArgs,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory of `.trace` files.
    pub input: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Largest backwards timestamp jump that is re-sorted instead of rejected.
    #[arg(long, default_value_t = 0)]
    pub order_tolerance_secs: i64,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    pub traces: PathBuf,
    /// TOML file overriding any of the default dead-token criteria.
    #[arg(long, value_name = "FILE")]
    pub criteria: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CutoffKind {
    /// Just before the located rug pull (observation end for alive projects).
    Prerug,
    /// A fixed number of days after launch.
    FixedAge,
}

#[derive(Debug, Clone, Args)]
pub struct CutoffArgs {
    #[arg(long, value_enum, default_value_t = CutoffKind::Prerug)]
    pub cutoff: CutoffKind,
    #[arg(long, default_value_t = 0)]
    pub margin_hours: u32,
    /// Project age at the cutoff for `--cutoff fixed-age`.
    #[arg(long, default_value_t = 7)]
    pub age_days: u32,
    #[arg(long, default_value_t = 7)]
    pub early_tweet_days: u32,
    #[arg(long, default_value_t = 7)]
    pub liquidity_window_days: u32,
    #[arg(long, default_value_t = 10)]
    pub top_holders: usize,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    pub traces: PathBuf,
    pub labels: PathBuf,
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Temporal,
    Explicit,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, value_name = "FILE")]
    pub features: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub labels: PathBuf,
    #[arg(long, value_enum, default_value_t = PolicyKind::Temporal)]
    pub policy: PolicyKind,
    /// Share of projects, latest starts first, held out for testing.
    #[arg(long, default_value_t = 0.2)]
    pub fraction: f64,
    /// One project id per line, for `--policy explicit`.
    #[arg(long, value_name = "FILE")]
    pub test_ids: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// `log1p` or `raw`.
    #[arg(long, default_value = "log1p")]
    pub encoding: String,
    #[arg(long, default_value_t = 0.01)]
    pub l2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    /// Model file written by `train`.
    #[arg(long, value_name = "FILE", conflicts_with = "predictions", required_unless_present = "predictions")]
    pub model: Option<PathBuf>,
    /// External `project_id,score` file covering the test split.
    #[arg(long, value_name = "FILE")]
    pub predictions: Option<PathBuf>,
    /// Report name; defaults to `logreg` or the prediction file's stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, value_name = "DIR")]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of `<name>.metrics.txt` files.
    #[arg(long, value_name = "DIR")]
    pub reports: PathBuf,
    /// Write the table here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub gen: GenArgs,
    #[command(flatten)]
    pub cutoff: CutoffArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = 0.2)]
    pub fraction: f64,
    #[arg(long, value_name = "FILE")]
    pub criteria: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}
