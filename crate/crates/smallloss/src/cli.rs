//! Command-line interface: `run`, `sweep`, and `check`.
//!
//! Exit codes are part of the contract:
//!
//! | code | meaning |
//! |------|---------|
//! | 0    | success |
//! | 1    | configuration error (bad flags, bad config file, bad values) |
//! | 2    | invariant violation reported by the monitors or a suite |
//! | 3    | runtime failure (I/O, learner, environment) |
//!
//! `run` and `sweep` print the experiment summary JSON to stdout; `check`
//! prints the suite report JSON. Progress notes go to stderr.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::harness::{run_experiment, sweep_experiment, ExperimentConfig, HarnessError};
use crate::suites::run_suite;

#[derive(Debug, Parser)]
#[command(
    name = "smallloss",
    version,
    about = "Small-loss partial-information learners: experiments and invariant checks"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment: one CSV per seed plus summary.json.
    Run {
        /// JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        parallel: Option<usize>,
        /// Abort each seed's run on its first invariant violation.
        #[arg(long)]
        assert: bool,
    },
    /// Rerun an experiment across parameter values and fit a scaling
    /// exponent to (scale, regret).
    Sweep {
        /// JSON experiment config used as the template.
        #[arg(long)]
        config: PathBuf,
        /// Parameter to vary: mu_star, d, num_cliques, T, or K.
        #[arg(long)]
        param: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        parallel: Option<usize>,
        /// Abort each seed's run on its first invariant violation.
        #[arg(long)]
        assert: bool,
    },
    /// Run one randomized invariant suite.
    Check {
        /// Suite name: freezing, estimators, concentration, shifting-dp,
        /// or graph-tools.
        #[arg(long)]
        suite: String,
        /// Randomized trials to run.
        #[arg(long)]
        trials: u64,
        /// Master seed for the suite's generators.
        #[arg(long)]
        seed: u64,
    },
}

/// Parse arguments, dispatch, and map outcomes to the exit-code contract.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                // Help and version displays are successes, not errors.
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(violations) => {
            eprintln!("error: {violations} invariant violations reported");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                HarnessError::Config(_) => 1,
                HarnessError::Invariant(_) => 2,
                HarnessError::Runtime(_) => 3,
            };
            ExitCode::from(code)
        }
    }
}

/// Execute one subcommand; the returned count is the violations to surface
/// through the exit code.
fn dispatch(command: Command) -> Result<u64, HarnessError> {
    match command {
        Command::Run {
            config,
            out,
            parallel,
            assert,
        } => {
            let cfg = load_config(&config)?;
            let out_dir = resolve_out_dir(&cfg, out)?;
            let summary = run_experiment(&cfg, &out_dir, parallel, assert)?;
            print_json(&summary)?;
            eprintln!(
                "wrote {} run(s) to {}",
                cfg.seeds.len(),
                out_dir.display()
            );
            Ok(summary.violations)
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
            parallel,
            assert,
        } => {
            let cfg = load_config(&config)?;
            let out_dir = resolve_out_dir(&cfg, out)?;
            let summary = sweep_experiment(&cfg, &param, &values, &out_dir, parallel, assert)?;
            print_json(&summary)?;
            eprintln!(
                "swept {param} over {} value(s) into {}",
                values.len(),
                out_dir.display()
            );
            Ok(summary.violations)
        }
        Command::Check { suite, trials, seed } => {
            let report = run_suite(&suite, trials, seed)?;
            print_json(&report)?;
            Ok(report.violations)
        }
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("config file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("config file {}: {e}", path.display())))
}

fn resolve_out_dir(
    cfg: &ExperimentConfig,
    flag: Option<PathBuf>,
) -> Result<PathBuf, HarnessError> {
    flag.or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            HarnessError::Config(
                "no output directory: pass --out or set output_dir in the config".into(),
            )
        })
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), HarnessError> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::Runtime(format!("serialization: {e}")))?;
    println!("{json}");
    Ok(())
}
