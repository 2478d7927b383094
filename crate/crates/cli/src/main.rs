//! `quard`: collection, statistics, evaluation, inspection and rendering.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quard_core::{ConfigError, QuardConfig, Skill};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "quard",
    version,
    about = "Quadruped command-level dataset and evaluation toolkit"
)]
struct Cli {
    /// Configuration file (TOML); defaults are used when absent.
    #[arg(long, global = true, env = "QUARD_CONFIG")]
    config: Option<PathBuf>,
    /// Worker threads for generation and evaluation.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    /// Repeat for more log output on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate expert episodes into a new store.
    Collect(CollectArgs),
    /// Evaluate a policy on a named suite.
    Eval(EvalArgs),
    /// Write a top-down trajectory SVG and the frames of one episode.
    Render(RenderArgs),
    /// Summarize a store: lengths per task and speed, gait and source shares.
    Stats(StatsArgs),
    /// Import real-robot episode folders into a store.
    Import(ImportArgs),
    /// Print a store manifest, one episode, or export a suite definition.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct CollectArgs {
    /// Output store directory; must not hold a store yet.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Skills to generate (comma separated). Without it the scaled corpus plan is used.
    #[arg(long, value_delimiter = ',')]
    pub task: Vec<Skill>,
    /// Episodes per selected skill.
    #[arg(long)]
    pub count: Option<usize>,
    /// Generate real-domain episodes.
    #[arg(long)]
    pub real: bool,
    /// Divisor applied to the full corpus plan.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub scale: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// `oracle`, `random` or `knn:<store>`.
    #[arg(long)]
    pub policy: String,
    /// Suite name (`seen`, `unseen_object`, `unseen_verbal`, `<skill>_<n>`,
    /// `real_go_to_<n>`) or a suite TOML file.
    #[arg(long)]
    pub suite: String,
    #[arg(long)]
    pub seed: u64,
    /// Directory for report.txt, report.csv and episodes.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Neighbors for the knn policy.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub episode: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Directory for stats.txt, stats.json and stats.svg.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Directory of episode folders.
    #[arg(long)]
    pub from: PathBuf,
    /// Target store; created when missing.
    #[arg(long)]
    pub store: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long, required_unless_present = "suite", conflicts_with = "suite")]
    pub store: Option<PathBuf>,
    /// Show one episode as JSON.
    #[arg(long, requires = "store")]
    pub episode: Option<String>,
    /// Export the named suite as TOML to `--out`.
    #[arg(long, requires_all = ["seed", "out"])]
    pub suite: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => QuardConfig::load(path)?,
        None => QuardConfig::default(),
    };
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Collect(a) => commands::collect(&a, &cfg),
        Command::Eval(a) => commands::eval(&a, &cfg),
        Command::Render(a) => commands::render(&a, &cfg),
        Command::Stats(a) => commands::stats(&a),
        Command::Import(a) => commands::import(&a, &cfg),
        Command::Inspect(a) => commands::inspect(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
