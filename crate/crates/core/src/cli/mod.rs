//! Command-line front end: `nfl <experiment> --config <path> [--out <dir>] [--workers N]`.

pub mod config;
pub mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{Experiment, ExperimentConfig};
pub use run::{replay, run, Report};

use crate::error::NflError;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "nfl", version, about = "Nonlocal front laboratory")]
pub struct Cli {
    /// Worker threads for the inner parallel loops.
    #[arg(long, global = true, env = "NFL_WORKERS")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    Validate(RunArgs),
    Simulate(RunArgs),
    Wave(RunArgs),
    Fronts(RunArgs),
    Regularity(RunArgs),
    Envelope(RunArgs),
    Squeeze(RunArgs),
    /// Re-run a persisted experiment and compare its artifacts.
    Replay {
        dir: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Config, I/O and provenance problems exit 2; everything else that fails exits 1.
pub fn exit_code(e: &NflError) -> u8 {
    match e {
        NflError::ConfigInvalid { .. }
        | NflError::ConfigDrift { .. }
        | NflError::MissingArtifacts(_)
        | NflError::Io(_)
        | NflError::Json(_) => EXIT_CONFIG,
        _ => EXIT_FAILED,
    }
}

fn execute(cli: Cli) -> Result<u8, NflError> {
    let (tag, args) = match cli.command {
        Command::Replay { dir } => {
            let rep = replay(&dir)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            return Ok(if rep.identical { EXIT_PASS } else { EXIT_FAILED });
        }
        Command::Validate(a) => (Experiment::Validate, a),
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::Wave(a) => (Experiment::Wave, a),
        Command::Fronts(a) => (Experiment::Fronts, a),
        Command::Regularity(a) => (Experiment::Regularity, a),
        Command::Envelope(a) => (Experiment::Envelope, a),
        Command::Squeeze(a) => (Experiment::Squeeze, a),
    };
    let cfg = ExperimentConfig::from_json(&std::fs::read_to_string(&args.config)?)?;
    if cfg.experiment != tag {
        return Err(NflError::ConfigInvalid {
            path: "experiment".into(),
            reason: format!("config is tagged `{}` but `{}` was requested", cfg.experiment.tag(), tag.tag()),
        });
    }
    let out = args.out.or_else(|| cfg.output.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("nfl-out"));
    let report = run(&cfg, &out)?;
    println!("{}: {} ({})", tag.tag(), if report.pass { "pass" } else { "FAIL" }, out.join(run::REPORT_FILE).display());
    if let Some(first) = report.failures.first() {
        eprintln!("experiment failed: first failing assertion `{first}`");
        return Ok(EXIT_FAILED);
    }
    Ok(EXIT_PASS)
}

pub fn main_with(cli: Cli) -> ExitCode {
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
