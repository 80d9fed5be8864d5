use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "spc",
    version,
    about = "Sequential personalized classification experiments",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic benchmark (train, stream and manifest files).
    Synth(SynthArgs),
    /// Select initial classes from a training file and write their prototypes.
    BuildPrototypes(BuildArgs),
    /// Replay every user stream under one strategy and report per bucket.
    Eval(EvalArgs),
    /// Evaluate a grid of w (or w_s) values, one report row per value.
    Sweep(SweepArgs),
    /// Choose w by cross-validation over users.
    Cv(CvArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub users: Option<usize>,
    /// Records per user.
    #[arg(long)]
    pub records: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Number of common classes.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub novel_per_user: Option<usize>,
    /// Share of each user's records drawn from private classes.
    #[arg(long)]
    pub novel_mass: Option<f64>,
    /// Zipf exponent of class frequencies.
    #[arg(long)]
    pub zipf: Option<f64>,
    #[arg(long)]
    pub sigma_user: Option<f64>,
    #[arg(long)]
    pub sigma_sample: Option<f64>,
    #[arg(long)]
    pub confusable_groups: Option<usize>,
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Angular radius of a confusable group, in radians.
    #[arg(long)]
    pub group_tightness: Option<f64>,
    /// Training samples of the most frequent common class.
    #[arg(long)]
    pub train_max: Option<usize>,
    #[arg(long)]
    pub train_min: Option<usize>,
    /// Keep negative components instead of clipping them to zero.
    #[arg(long)]
    pub signed: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Minimum training records for a class to be selected.
    #[arg(long, default_value_t = 1)]
    pub min_records: u64,
    /// Average at most this many sampled records per class.
    #[arg(long)]
    pub per_class_cap: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyName {
    Spc,
    SpcSum,
    NcmFixed,
    #[value(name = "ncm-incr:full")]
    NcmIncrFull,
    #[value(name = "ncm-incr:one")]
    NcmIncrOne,
    #[value(name = "1nn")]
    OneNn,
    #[value(name = "1nn-star")]
    OneNnStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum FormatName {
    #[default]
    Tsv,
    Markdown,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report file; the report goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatName::Tsv)]
    pub format: FormatName,
    /// Add full-precision columns.
    #[arg(long)]
    pub precise: bool,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub prototypes: PathBuf,
    #[arg(long)]
    pub stream: PathBuf,
}

#[derive(Debug, Args)]
pub struct BucketArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,5")]
    pub topk: Vec<usize>,
    /// Width of a report bucket, in records.
    #[arg(long, default_value_t = 50)]
    pub bucket: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub strategy: StrategyName,
    /// Prototype weight for `spc` (default 0.85).
    #[arg(long)]
    pub w: Option<f64>,
    /// Prototype balance for `spc-sum` (default 0.5).
    #[arg(long)]
    pub ws: Option<f64>,
    /// Never register records, so every user store stays empty.
    #[arg(long)]
    pub no_register: bool,
    #[command(flatten)]
    pub buckets: BucketArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("grid").required(true).args(["w_grid", "ws_grid"])))]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// `start:step:end` or a comma list of w values.
    #[arg(long)]
    pub w_grid: Option<String>,
    /// `start:step:end` or a comma list of w_s values.
    #[arg(long)]
    pub ws_grid: Option<String>,
    #[command(flatten)]
    pub buckets: BucketArgs,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 2)]
    pub folds: usize,
    #[arg(long, default_value = "0.70:0.05:1.00")]
    pub w_grid: String,
    /// k of the top-k accuracy being maximized.
    #[arg(long, default_value_t = 1)]
    pub objective_k: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub report: ReportArgs,
}
