//! Pipeline front end: each subcommand reads one JSON config, writes its
//! artifacts plus a manifest into the output directory, and exits 0 on
//! success, 2 on configuration errors, 3 on data errors.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// The configuration (file, flags, or referenced paths) is unusable.
    Config(String),
    /// The configuration is fine but the data pipeline failed.
    Data(textmine::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(e) => write!(f, "data error: {e}"),
        }
    }
}

impl From<textmine::Error> for CliError {
    fn from(e: textmine::Error) -> Self {
        CliError::Data(e)
    }
}

#[derive(Parser)]
#[command(
    name = "textmine",
    version,
    about = "Corpus mining: quality gating, bag-of-words prep, LDA topic models, and summaries"
)]
struct Cli {
    /// Pipeline configuration file (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Cap the worker thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score documents against the dictionary and drop, keep, or correct them.
    Quality,
    /// Tokenize, filter, stem, and write the document-term matrix.
    Prep,
    /// Fit the topic model and write its archive and summaries.
    Fit,
    /// Score candidate topic counts with four selection metrics.
    SelectK,
    /// Derive frequency, importance, and assignment tables from a fitted model.
    Analyze,
    /// Aggregate document volume and topic prevalence over time.
    Timeline,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("config: --config <PATH> is required".into()))?;
    let mut cfg = config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    config::validate(&cfg)?;
    match cli.command {
        Command::Quality => commands::quality(&cfg),
        Command::Prep => commands::prep(&cfg),
        Command::Fit => commands::fit(&cfg),
        Command::SelectK => commands::select_k(&cfg),
        Command::Analyze => commands::analyze(&cfg),
        Command::Timeline => commands::timeline(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
