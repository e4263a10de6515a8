//! Experiment harness behind the `gossipcalc` binary.

pub mod commands;
pub mod config;
pub mod error;

use clap::{Parser, Subcommand};

pub use config::{validate_config, ExperimentConfig, Flags, Violation};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gossipcalc", version, about = "Gossip computation of separable functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sum estimator; emits a JSON array of trial records.
    Compute(Flags),
    /// Run push-pull message spreading; emits the empirical spreading time.
    Spread(Flags),
    /// Exact conductance and spectral gap of the max-degree matrix.
    Conductance(Flags),
    /// Spreading time across `--sizes`, with a log-log fit.
    Sweep(Flags),
}

/// Thread cap for trial fan-out, from `GOSSIPCALC_THREADS`.
pub const THREADS_ENV: &str = "GOSSIPCALC_THREADS";

pub fn run_experiment(cli: &Cli) -> Result<(), CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Compute(f) => commands::run_compute(&f.resolve()?),
        Command::Spread(f) => commands::run_spread(&f.resolve()?),
        Command::Conductance(f) => commands::run_conductance(&f.resolve()?),
        Command::Sweep(f) => commands::run_sweep(&f.resolve()?),
    })
}
