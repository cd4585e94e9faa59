//! `quantid`: batch front end for quantized-output identification runs.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ModeSelection, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "quantid", version, about = "Sparse LTI identification from quantized, fragmented output data")]
struct Cli {
    /// TOML run configuration; defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeSelection>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for experiment grids.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset and write it with its ground truth.
    Simulate,
    /// Identify a system from the configured source or a dataset CSV.
    Identify {
        /// Dataset written by `simulate`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run one of the experiment grids.
    Experiment {
        #[arg(value_enum)]
        which: Experiment,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Experiment {
    MultiSystem,
    NoiseSweep,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    cfg.solver.seed = cfg.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli)?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("workers: {e}")))?;
    }
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Identify { data } => commands::identify(&cfg, data.as_deref()),
        Command::Experiment { which: Experiment::MultiSystem } => commands::multi_system(&cfg),
        Command::Experiment { which: Experiment::NoiseSweep } => commands::noise_sweep(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
