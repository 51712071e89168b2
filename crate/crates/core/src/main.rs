use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rsma_core::harness::{self, RunOptions};
use rsma_core::Error;

const WORKERS_ENV: &str = "RSMA_SIM_WORKERS";

/// Monte Carlo simulator for quantization-aware downlink precoders.
#[derive(Parser)]
#[command(name = "rsma-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write one CSV row per (trial, SNR, algorithm).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (falls back to RSMA_SIM_WORKERS, then all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides base_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Record per-solve wall time instead of 0.
        #[arg(long)]
        timing: bool,
    },
    /// Aggregate a run CSV per SNR and algorithm.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Io(String),
}

impl Failure {
    fn from_error(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Csv(_) => Failure::Io(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

fn workers(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Failure::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers: w,
            seed,
            timing,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", config.display())))?;
            let mut spec = harness::load_spec(&text).map_err(|e| Failure::Config(format!("{}: {e}", config.display())))?;
            if let Some(s) = seed {
                spec.base_seed = s;
            }
            let options = RunOptions {
                workers: workers(w)?,
                timing,
            };
            let records = harness::run_experiment_with(&spec, options).map_err(Failure::from_error)?;
            harness::write_csv(&records, &out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
            let failed = records.iter().filter(|r| r.failed()).count();
            eprintln!("wrote {} records ({failed} failed) to {}", records.len(), out.display());
            Ok(())
        }
        Command::Summarize { input, out } => {
            let records = harness::read_csv(&input).map_err(|e| match e {
                Error::Io(_) => Failure::Io(format!("{}: {e}", input.display())),
                other => Failure::Config(format!("{}: {other}", input.display())),
            })?;
            let rows = harness::summarize(&records);
            harness::write_summary_csv(&rows, &out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
