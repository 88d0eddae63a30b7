use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use crisiscomm::config::RawConfig;
use crisiscomm::pipeline::{cmd_fit_dtm, cmd_fit_lda, cmd_ingest, cmd_report, cmd_sentiment, run_all};
use crisiscomm::{CliError, Result};

/// Topic, sentiment and outbreak timelines from archived agency tweets.
///
/// Exit codes: 0 success, 1 configuration error, 2 missing or stale upstream
/// artifact, 3 data error.
#[derive(Debug, Parser)]
#[command(name = "crisiscomm", version)]
struct Cli {
    /// Run configuration (`key = value` lines); relative paths resolve against its directory.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `out`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed, overriding `seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Abort on the first malformed input line.
    #[arg(long, global = true)]
    strict: bool,
    /// Override any config key; relative paths resolve against the working directory.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate and normalise the tweet archive and indicator table.
    Ingest,
    /// Fit LDA for each K in `k_grid` and keep the most coherent.
    FitLda,
    /// Fit the dynamic topic model.
    FitDtm,
    /// Score tweets and aggregate daily sentiment.
    Sentiment,
    /// Align topics, sentiment and indicators and write the report.
    Report {
        /// Run every stage first.
        #[arg(long)]
        all: bool,
    },
}

fn load_config(cli: &Cli) -> Result<crisiscomm::config::RunConfig> {
    let cwd = std::env::current_dir().map_err(|e| CliError::Config(format!("working directory: {e}")))?;
    let mut raw = match &cli.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::new(&cwd),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        raw.set_with_base(k.trim(), v.trim(), cwd.clone())?;
    }
    if let Some(out) = &cli.out {
        raw.set_with_base("out", &out.to_string_lossy(), cwd.clone())?;
    }
    if let Some(seed) = cli.seed {
        raw.set("seed", &seed.to_string())?;
    }
    if cli.strict {
        raw.set("strict", "true")?;
    }
    raw.resolve()
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Ingest => cmd_ingest(&cfg),
        Command::FitLda => cmd_fit_lda(&cfg),
        Command::FitDtm => cmd_fit_dtm(&cfg),
        Command::Sentiment => cmd_sentiment(&cfg),
        Command::Report { all } => {
            let files = if all { run_all(&cfg)? } else { cmd_report(&cfg)? };
            println!("{}", files.table.display());
            println!("{}", files.summary.display());
            for c in &files.charts {
                println!("{}", c.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
