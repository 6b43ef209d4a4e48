use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod manifest;
mod stub;

/// Compare systems evaluated by repeated k-fold cross-validation with a
/// hierarchical Bayesian model and a region of practical equivalence.
#[derive(Parser)]
#[command(name = "baycv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a repeated k-fold split plan.
    Split(SplitArgs),
    /// Run an external tagger over every fold and record its scores.
    Score(ScoreArgs),
    /// Compare two systems on one metric.
    Compare(CompareArgs),
    /// Compare every pair of systems and order them.
    Rank(RankArgs),
    /// Draw the posterior simplex of a comparison as SVG.
    Plot(PlotArgs),
    /// Write synthetic scores drawn from the hierarchical model.
    #[command(hide = true)]
    Generate(GenerateArgs),
    /// Baseline tagger used by the bundled fixtures.
    #[command(hide = true)]
    StubTagger(StubArgs),
}

#[derive(Args)]
pub struct SplitArgs {
    /// Number of items (sentences) to split.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    pub k: u64,
    /// Number of independently shuffled repetitions.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Data set as NAME=PATH to a tagged corpus; repeatable.
    #[arg(long = "dataset", required = true, value_parser = parse_named_path)]
    pub datasets: Vec<(String, PathBuf)>,
    /// Split plan from `split`; otherwise one is made per data set from
    /// --k, --m and --seed.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    pub k: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Name recorded for the system in the score file.
    #[arg(long)]
    pub system: String,
    /// Shell command template with {train}, {valid}, {eval} or {tokens},
    /// and {out} placeholders.
    #[arg(long)]
    pub command: String,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Vocabulary for OOV accuracy: `train` or `train+valid`.
    #[arg(long, default_value = "train")]
    pub oov_vocab: String,
    /// Keep role and prediction files here instead of a temporary directory.
    #[arg(long)]
    pub work_dir: Option<PathBuf>,
    /// Score CSV to write; existing rows are kept and merged.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone)]
pub struct RopeArgs {
    /// ROPE half-width on the raw score-difference scale.
    #[arg(long, required_unless_present = "rope_ci95", conflicts_with = "rope_ci95")]
    pub rope: Option<f64>,
    /// Size the ROPE as half the pooled empirical 95% interval of the
    /// per-fold differences.
    #[arg(long)]
    pub rope_ci95: bool,
}

#[derive(Args, Clone)]
pub struct ModelArgs {
    /// `hierarchical` (two or more data sets) or `ttest` (exactly one).
    #[arg(long, default_value = "hierarchical", value_parser = ["hierarchical", "ttest"])]
    pub model: String,
    /// Fold correlation: `1/k` or a number.
    #[arg(long, default_value = "1/k")]
    pub rho: String,
    #[arg(long, default_value_t = 4)]
    pub chains: usize,
    /// Retained draws per chain.
    #[arg(long, default_value_t = 12_500)]
    pub samples: usize,
    #[arg(long, default_value_t = 2_500)]
    pub warmup: usize,
    #[arg(long, default_value_t = 4)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub no_standardize: bool,
    #[arg(long, default_value_t = 1000.0)]
    pub sigma_bar_factor: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta0_halfwidth: f64,
    #[arg(long, default_value_t = 2.0)]
    pub nu_shape: f64,
    #[arg(long, default_value_t = 0.1)]
    pub nu_rate: f64,
    /// Maximum chains sampled at once.
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long)]
    pub metric: String,
    /// Restrict the comparison to one data set.
    #[arg(long)]
    pub dataset: Option<String>,
    #[command(flatten)]
    pub rope: RopeArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct RankArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub metric: String,
    /// Systems to rank, comma separated; defaults to all in the score file.
    #[arg(long, value_delimiter = ',')]
    pub systems: Option<Vec<String>>,
    #[command(flatten)]
    pub rope: RopeArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also write the chains of every pair.
    #[arg(long)]
    pub save_chains: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct PlotArgs {
    /// Chains CSV written by `compare` (with its .meta sidecar).
    #[arg(long)]
    pub chains: PathBuf,
    /// Report CSV to annotate the corners with; otherwise the draws are
    /// tallied against --rope.
    #[arg(long, required_unless_present = "rope")]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub rope: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct GenerateArgs {
    /// System as NAME=DELTA0; its scores are base + simulated differences.
    #[arg(long = "system", required = true, value_parser = parse_named_f64)]
    pub systems: Vec<(String, f64)>,
    /// Optional system scored exactly `base` on every fold.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long, default_value_t = 0.9)]
    pub base: f64,
    #[arg(long, default_value_t = 0.005)]
    pub sigma0: f64,
    #[arg(long, default_value_t = 5.0)]
    pub nu: f64,
    #[arg(long, default_value_t = 8)]
    pub q: usize,
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 0.005)]
    pub sigma_lo: f64,
    #[arg(long, default_value_t = 0.01)]
    pub sigma_hi: f64,
    #[arg(long, default_value = "token")]
    pub metric: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct StubArgs {
    #[arg(long, value_enum)]
    pub strategy: stub::Strategy,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub tokens: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_named_path(s: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or("expected NAME=PATH")?;
    if name.is_empty() || path.is_empty() {
        return Err("expected NAME=PATH".into());
    }
    Ok((name.to_string(), PathBuf::from(path)))
}

fn parse_named_f64(s: &str) -> Result<(String, f64), String> {
    let (name, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: f64 = v.parse().map_err(|_| format!("not a number: {v}"))?;
    if name.is_empty() {
        return Err("expected NAME=VALUE".into());
    }
    Ok((name.to_string(), v))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

pub fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Split(a) => commands::split(&a),
        Command::Score(a) => commands::score(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Rank(a) => commands::rank(&a),
        Command::Plot(a) => commands::plot(&a),
        Command::Generate(a) => commands::generate(&a),
        Command::StubTagger(a) => stub::run(a.strategy, &a.train, &a.tokens, &a.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
