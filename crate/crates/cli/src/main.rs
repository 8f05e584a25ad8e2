//! `tally`: featurize tweet corpora, fit sparse negative binomial models,
//! select the penalty, bootstrap, and render coefficient tables.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tally_core::model::PenaltySet;
use tally_core::{Execution, SolverOptions};

#[derive(Debug, Parser)]
#[command(name = "tally", version, about = "Sparse negative binomial regression for tweet likes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a design matrix from a corpus, a follower series and a lexicon.
    Featurize(FeaturizeArgs),
    /// Generate a synthetic dataset with known coefficients.
    Simulate(SimulateArgs),
    /// Cross-validate the penalty over a grid.
    Cv(CvArgs),
    /// Fit the model at one penalty.
    Fit(FitArgs),
    /// Bootstrap the fit at one penalty.
    Boot(BootArgs),
    /// Render coefficient tables from bootstrap runs.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// TOML file supplying default values for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Line-delimited JSON records: id, timestamp, text, likes, author.
    #[arg(long)]
    pub corpus: PathBuf,
    /// CSV with columns author, timestamp, count.
    #[arg(long)]
    pub followers: PathBuf,
    /// Lexicon TOML; the bundled lexicon is used when absent.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Figure topic of the corpus author; otherwise looked up from the handle.
    #[arg(long)]
    pub candidate: Option<String>,
    #[arg(long, default_value_t = 1e7)]
    pub follower_divisor: f64,
    /// Keep columns in their raw units.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: usize,
    /// True coefficients, intercept first.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub beta: Vec<f64>,
    #[arg(long)]
    pub alpha: f64,
    /// Column laws: `intercept`, `normal` or `bernoulli:Q`. Defaults to an
    /// intercept followed by normal columns.
    #[arg(long, value_delimiter = ',')]
    pub design: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Penalty {
    All,
    AllButIntercept,
}

#[derive(Debug, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0.002)]
    pub eta: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Penalty::All)]
    pub penalize: Penalty,
    /// Run folds and replicates on one thread.
    #[arg(long)]
    pub sequential: bool,
}

impl SolverArgs {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            eta: self.eta,
            max_iters: self.max_iters,
            tol: self.tol,
            penalized: match self.penalize {
                Penalty::All => PenaltySet::All,
                Penalty::AllButIntercept => PenaltySet::AllButIntercept,
            },
            seed: 0,
        }
    }

    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// Dataset CSV written by `featurize` or `simulate`.
    #[arg(long)]
    pub data: PathBuf,
    /// Scaling record; defaults to `scaling.csv` next to the dataset.
    #[arg(long)]
    pub scaling: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("penalty").required(true).args(["lambda", "cv"])))]
pub struct PenaltyArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    /// `cv_report.json` whose selected penalty to use.
    #[arg(long)]
    pub cv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CvArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = tally_core::selection::DEFAULT_FOLDS)]
    pub folds: usize,
    /// Explicit descending grid; overrides the generated one.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    #[arg(long, default_value_t = tally_core::selection::DEFAULT_GRID_SIZE)]
    pub grid_size: usize,
    #[arg(long, default_value_t = tally_core::selection::DEFAULT_GRID_RATIO)]
    pub grid_ratio: f64,
    /// Leave λ = 0 off the generated grid.
    #[arg(long)]
    pub no_baseline: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BootArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    /// `LABEL=DIR`, where DIR holds a `boot` run. Repeat for more columns.
    #[arg(long, required = true)]
    pub model: Vec<String>,
    /// `log_likes.csv` files from `featurize`, merged into one.
    #[arg(long)]
    pub likes: Vec<PathBuf>,
}

fn run() -> anyhow::Result<()> {
    let cmd = Cli::command();
    let argv = config::expand(&cmd, std::env::args_os().collect())?;
    let matches = cmd.try_get_matches_from(argv).unwrap_or_else(|e| e.exit());
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    match cli.command {
        Command::Featurize(a) => commands::featurize(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Cv(a) => commands::cv(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Boot(a) => commands::boot(&a),
        Command::Report(a) => commands::report(&a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
