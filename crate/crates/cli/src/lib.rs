//! Command-line front end: `steady`, `entangle`, `sweep`, `infer`, `validate`.
//!
//! Exit codes: 0 success, 2 configuration, 3 physics (including an unstable
//! point or a failed invariant), 4 I/O.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use trimode_core::gaussian::CovarianceMatrix;
use trimode_core::model::MeanFieldMode;

use crate::config::Config;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "trimode",
    version,
    about = "Steady-state entanglement of a χ(2) optomechanical microtoroid"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output file (JSON reports) or directory (sweep). Reports go to stdout
    /// when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "TRIMODE_WORKERS", value_name = "N")]
    pub workers: Option<usize>,

    /// Mean-field treatment; overrides the config file.
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<MeanFieldMode>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical steady state: amplitudes and all mean-field roots.
    Steady,
    /// Stability and entanglement measures at one point.
    Entangle,
    /// Parameter sweep with CSV, JSON sidecar and region boundaries.
    Sweep,
    /// Inferred covariance for a finite-bandwidth detector.
    Infer,
    /// Internal invariant suite at one point.
    Validate {
        /// Replace the solved covariance with one read from a JSON file.
        #[arg(long, hide = true, value_name = "PATH")]
        inject_covariance: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<MeanFieldMode, String> {
    s.parse()
        .map_err(|_| format!("expected one of paper, cubic, self_consistent; got {s:?}"))
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> CliResult<()> {
    let json = serde_json::to_string_pretty(report).expect("reports serialize");
    match out {
        Some(path) => std::fs::write(path, json + "\n").map_err(CliError::io("cannot write", path)),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{json}").map_err(CliError::io("cannot write", "<stdout>"))
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub fn run(cli: Cli) -> CliResult<()> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let config = Config::load(config_path)?;
    let mode = config.resolve_mode(cli.mode);
    let out = cli.out.as_deref();

    match cli.command {
        Command::Steady => emit(&commands::cmd_steady(&config, mode)?, out),
        Command::Entangle => {
            let report = commands::cmd_entangle(&config, mode)?;
            emit(&report, out)?;
            if report.stability.stable {
                Ok(())
            } else {
                Err(CliError::Verdict(format!(
                    "point is unstable (max Re λ = {:e} rad/s)",
                    report.stability.max_real_eigenvalue
                )))
            }
        }
        Command::Sweep => {
            let workers = cli.workers.unwrap_or_else(default_workers);
            let dir = out.unwrap_or(Path::new("sweep_out"));
            emit(&commands::cmd_sweep(&config, mode, workers, dir)?, None)
        }
        Command::Infer => emit(&commands::cmd_infer(&config, mode)?, out),
        Command::Validate { inject_covariance } => {
            let injected = inject_covariance
                .map(|path| -> CliResult<CovarianceMatrix> {
                    let text = std::fs::read_to_string(&path).map_err(CliError::io("cannot read", &path))?;
                    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("injected covariance: {e}")))
                })
                .transpose()?;
            let report = commands::cmd_validate(&config, mode, injected)?;
            emit(&report, out)?;
            if report.passed {
                Ok(())
            } else {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                Err(CliError::Verdict(format!("failed checks: {}", failed.join(", "))))
            }
        }
    }
}
