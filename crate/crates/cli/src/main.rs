//! `eann`: split, train, evaluate and inspect offensive-language
//! classifiers from the command line.
//!
//! Every command prints one JSON summary line on stdout and writes its
//! artifacts (plus the resolved `run_config.toml`) to `--out`. Exit codes:
//! 0 success, 1 usage error, 2 data error or failed check.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eann::model::Variant;

/// A bad flag, config file or option combination.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Raised by checks that ran but did not pass.
#[derive(Debug)]
pub struct CheckFailed(pub serde_json::Value);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("check failed")
    }
}

impl std::error::Error for CheckFailed {}

#[derive(Debug, Parser)]
#[command(name = "eann", version, about = "Offensive-language classification with emotion-aware attention")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for all randomness [env: EA_SEED].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emotion sidecar (JSONL of `{"id", "emoji"}`) attached to every dataset.
    #[arg(long)]
    pub emotion: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmojiArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Take vectors from this sidecar instead of the built-in stub encoder.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Training set (JSONL).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Validation set used to pick the best epoch.
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// GloVe text file; tokens it lacks get small random vectors.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Model variant, e.g. CNN_BILSTM_EA_EMOJI.
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Rescale gradients to at most this global norm.
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Train the embedding table too.
    #[arg(long)]
    pub finetune_embeddings: bool,
    /// Keep the last tokens of long posts instead of the first.
    #[arg(long)]
    pub truncate_tail: bool,
    /// Concatenate raw emoji probabilities instead of the binary top-5 mask.
    #[arg(long)]
    pub emoji_probabilities: bool,
}

#[derive(Debug, Args)]
pub struct ModelDataArgs {
    #[command(flatten)]
    pub common: Common,
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub inner: ModelDataArgs,
    /// Only these document ids (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub ids: Vec<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset holding the gold labels.
    #[arg(long)]
    pub gold: PathBuf,
    /// Predictions of the first model.
    #[arg(long)]
    pub a: PathBuf,
    /// Predictions of the second model.
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeEmojiArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Predictions for the correct/incorrect breakdown.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Emoji indices to export (comma separated); all 64 by default.
    #[arg(long, value_delimiter = ',')]
    pub subset: Vec<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Dims {
    /// T=6, d=4, H=3, A=3, two filters per width.
    Tiny,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value = "CNN_BILSTM_EA_EMOJI")]
    pub variant: Variant,
    #[arg(long, value_enum, default_value = "tiny")]
    pub dims: Dims,
    #[arg(long, default_value_t = 4)]
    pub docs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stratified train/val/test split (56/14/30).
    Split(SplitArgs),
    /// Attach emotion vectors from a sidecar or the stub encoder.
    Emoji(EmojiArgs),
    /// Train a model, keeping the epoch with the best validation macro F1.
    Train(TrainArgs),
    /// Score a checkpoint on a labelled dataset.
    Evaluate(ModelDataArgs),
    /// Write per-document predictions.
    Predict(ModelDataArgs),
    /// Export per-token attention weights.
    Explain(ExplainArgs),
    /// McNemar test between two prediction files.
    Compare(CompareArgs),
    /// Per-class emoji distributions and the error breakdown.
    AnalyzeEmoji(AnalyzeEmojiArgs),
    /// Finite-difference check of the full model gradient.
    Gradcheck(GradcheckArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).init();

    let result = match cli.command {
        Command::Split(a) => commands::split(a),
        Command::Emoji(a) => commands::emoji(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Predict(a) => commands::predict(a),
        Command::Explain(a) => commands::explain(a),
        Command::Compare(a) => commands::compare(a),
        Command::AnalyzeEmoji(a) => commands::analyze_emoji(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let Some(CheckFailed(summary)) = e.downcast_ref() {
                println!("{summary}");
                return ExitCode::from(2);
            }
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
