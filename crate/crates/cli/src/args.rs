use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "dualfeat",
    version,
    about = "Automated feature generation for tabular data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a better feature set and export it.
    Run(RunArgs),
    /// Cross-validated score of a table, without any search.
    Evaluate(EvaluateArgs),
    /// Order statistics and convergence series of a finished run.
    Report(ReportArgs),
    /// Write a synthetic table and its schema.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Schema file, one `name=kind` line per column.
    #[arg(long)]
    pub schema: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: DataArgs,
    /// Output directory, created if missing.
    #[arg(long, env = crate::OUT_DIR_ENV)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Exploration steps per epoch.
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Downstream learner: rf or logreg.
    #[arg(long, default_value = "rf")]
    pub learner: String,
    /// Trees per forest.
    #[arg(long, default_value_t = 50)]
    pub trees: usize,
    /// Remove one component: k (discriminator), t (attention), c (discrete handling).
    #[arg(long)]
    pub ablation: Option<String>,
    /// f1-macro, f1-weighted or 1rae; defaults by task.
    #[arg(long)]
    pub metric: Option<String>,
    /// Maximum feature count; defaults to four times the original count.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Keep the working set across epochs.
    #[arg(long)]
    pub chain_epochs: bool,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Credit each discriminator action only with its own reward term.
    #[arg(long)]
    pub masked_rewards: bool,
    /// Bootstrap from a lagged network refreshed every N updates.
    #[arg(long)]
    pub target_sync: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: DataArgs,
    #[arg(long, default_value = "rf")]
    pub learner: String,
    #[arg(long, default_value_t = 50)]
    pub trees: usize,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of a completed run.
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// product-regression (y = x1·x2 + noise) or product-classification.
    #[arg(long, default_value = "product-regression")]
    pub kind: String,
    #[arg(long, default_value_t = 500)]
    pub rows: usize,
    #[arg(long, default_value_t = 5)]
    pub features: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving data.csv and schema.txt.
    #[arg(long)]
    pub out: PathBuf,
}
