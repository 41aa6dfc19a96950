use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ltcrank::dataset::{Normalization, Proxy};
use ltcrank::evaluation::{Backbone, Factor, TiePolicy};
use ltcrank::pairing::TaskId;

mod commands;
mod output;
mod predictors;

use predictors::PredictorSpec;

/// Predict which pretrained checkpoint fine-tunes better from proxy metrics.
#[derive(Debug, Parser)]
#[command(name = "ltcrank", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Model table CSV; the built-in corpus when absent.
    #[arg(long, global = true, env = "LTCRANK_DATA")]
    pub dataset: Option<PathBuf>,
    /// Perplexity columns in the dataset hold raw perplexity, not its inverse.
    #[arg(long, global = true)]
    pub raw_perplexity: bool,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// First split seed; runs use consecutive seeds from here.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed_base: u64,
    /// Worker threads for protocol runs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Proxy scaling used by aggregated-proxy scores.
    #[arg(long, global = true, value_enum, default_value_t = NormArg::Minmax)]
    pub normalization: NormArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    Minmax,
    Zscore,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Minmax => Normalization::MinMax,
            NormArg::Zscore => Normalization::ZScore,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TiesArg {
    Exclude,
    Half,
}

impl From<TiesArg> for TiePolicy {
    fn from(t: TiesArg) -> Self {
        match t {
            TiesArg::Exclude => TiePolicy::Exclude,
            TiesArg::Half => TiePolicy::Half,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a model table and write its canonical form.
    Ingest,
    /// Accuracy of single and aggregated proxies.
    Baselines(BaselinesArgs),
    /// Repeated-split training and evaluation of a pairwise comparator.
    Ltc(LtcArgs),
    /// Data and SVG renderings for the analysis figures.
    Figures {
        #[command(subcommand)]
        which: Figure,
    },
    /// Borda ranking and top-k recall.
    Rank(RankArgs),
    /// Between-group accuracy for one pretraining factor.
    Grouped(GroupedArgs),
}

#[derive(Debug, Args)]
pub struct TaskSelection {
    /// Tasks to report (comma separated); all three when absent.
    #[arg(long = "task", value_delimiter = ',', num_args = 1..)]
    pub tasks: Option<Vec<TaskId>>,
}

#[derive(Debug, Args)]
pub struct BaselinesArgs {
    #[command(flatten)]
    pub tasks: TaskSelection,
    #[arg(long, value_enum, default_value_t = TiesArg::Exclude)]
    pub ties: TiesArg,
    /// Also score every baseline on each split's held-out pairs.
    #[arg(long)]
    pub over_splits: bool,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
}

#[derive(Debug, Args)]
pub struct LtcArgs {
    #[arg(long, default_value = "gbdt")]
    pub backbone: Backbone,
    /// Task whose outcomes label the training pairs.
    #[arg(long, default_value = "sft_cms")]
    pub train: TaskId,
    /// Tasks whose outcomes label the test pairs (comma separated).
    #[arg(long = "eval", value_delimiter = ',', num_args = 1..)]
    pub eval: Option<Vec<TaskId>>,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// Add every training pair in reversed order too.
    #[arg(long)]
    pub augment_flip: bool,
    /// Skip writing per-run model files.
    #[arg(long)]
    pub no_dumps: bool,
}

#[derive(Debug, Subcommand)]
pub enum Figure {
    /// Accuracy per quantile of the true score gap.
    Buckets(BucketsArgs),
    /// Top-k recall against ranking cutoff.
    Recall(RecallArgs),
    /// Between-group accuracy per factor.
    Grouped(GroupedArgs),
    /// Gain importance per proxy of the boosted comparators.
    Importance(ImportanceArgs),
}

#[derive(Debug, Args)]
pub struct BucketsArgs {
    #[command(flatten)]
    pub tasks: TaskSelection,
    /// Proxies, combos or backbones (comma separated).
    #[arg(long = "predictor", value_delimiter = ',', num_args = 1.., default_value = "kshot_rag,ppl_clm,gbdt")]
    pub predictors: Vec<PredictorSpec>,
    #[arg(long, default_value_t = 5)]
    pub buckets: usize,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
}

#[derive(Debug, Args)]
pub struct RecallArgs {
    #[command(flatten)]
    pub tasks: TaskSelection,
    #[arg(long = "predictor", value_delimiter = ',', num_args = 1.., default_value = "kshot_rag,ppl_sc,gbdt")]
    pub predictors: Vec<PredictorSpec>,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1,5")]
    pub k: Vec<usize>,
    /// Fit supervised predictors on every pair and rank all models.
    #[arg(long)]
    pub rank_all: bool,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[command(flatten)]
    pub tasks: TaskSelection,
    /// Average per-split models instead of fitting on every pair.
    #[arg(long)]
    pub per_split: bool,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub tasks: TaskSelection,
    #[arg(long, default_value = "gbdt")]
    pub predictor: PredictorSpec,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1,5")]
    pub k: Vec<usize>,
    #[arg(long)]
    pub rank_all: bool,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
}

#[derive(Debug, Args)]
pub struct GroupedArgs {
    #[command(flatten)]
    pub tasks: TaskSelection,
    #[arg(long, default_value = "objective")]
    pub factor: Factor,
    #[arg(long = "proxy", value_delimiter = ',', num_args = 1.., default_value = "ppl_sc,kshot_rag")]
    pub proxies: Vec<Proxy>,
}

/// A command-line mistake that clap's own checks cannot see.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2));
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
