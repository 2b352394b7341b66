//! Command-line front end: configuration parsing, run dispatch and the
//! CSV/JSON artifacts each subcommand writes.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::{parse_config, Command, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qdamp", version, about = "Damped quantum oscillators: kernels, propagation, spectra and moments")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `[run] out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized checks (overrides `[run] seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: SubCommand,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum SubCommand {
    /// Propagate the initial packet to each requested time.
    Propagate,
    /// Kernel parameters from the closed-form and generic paths.
    Kernel,
    /// Expectation-value trajectories.
    Moments,
    /// Convergence of the eigenfunction expansion of the kernel.
    Mehler,
    /// Energies and defects of the shifted-oscillator eigenstates.
    Eigen,
    /// Run the acceptance suite and write report.json.
    Verify,
}

impl From<SubCommand> for Command {
    fn from(s: SubCommand) -> Self {
        match s {
            SubCommand::Propagate => Command::Propagate,
            SubCommand::Kernel => Command::Kernel,
            SubCommand::Moments => Command::Moments,
            SubCommand::Mehler => Command::Mehler,
            SubCommand::Eigen => Command::Eigen,
            SubCommand::Verify => Command::Verify,
        }
    }
}

/// Loads the configuration and applies command-line overrides.
pub fn load_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| format!("invalid config {}:\n{e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let command = Command::from(cli.command);
    cfg.validate_for(command).map_err(|e| format!("invalid config for {command:?}:\n{e}"))?;
    if command != Command::Verify {
        cfg.initial().sample(cfg.grid()).map_err(|e| format!("initial packet does not fit the grid: {e}"))?;
    }
    Ok(cfg)
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match load_config(cli) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let result = commands::ensure_dir(&cfg.out).and_then(|()| match cli.command {
        SubCommand::Propagate => commands::run_propagate(&cfg, &cfg.out),
        SubCommand::Kernel => commands::run_kernel(&cfg, &cfg.out),
        SubCommand::Moments => commands::run_moments(&cfg, &cfg.out),
        SubCommand::Mehler => commands::run_mehler(&cfg, &cfg.out),
        SubCommand::Eigen => commands::run_eigen(&cfg, &cfg.out),
        SubCommand::Verify => commands::run_verify(&cfg, &cfg.out),
    });
    match result {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::ChecksFailed) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_CHECK_FAILED
        }
    }
}
