//! `hypermask`: simulation, analysis and file transmission over synchronized hyperchaotic maps.

mod commands;
mod config;
mod exit;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{ber, files, lyapunov, map, selftest, sync};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "hypermask", version, about)]
struct Cli {
    /// TOML config with dotted keys, e.g. `map.beta = 0.4`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Master seed; required by stochastic commands unless set in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap on worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate the map and export the trajectory.
    Map(map::MapArgs),
    /// Lyapunov spectra: analytic check, estimators, beta and settling sweeps.
    Lyapunov(lyapunov::LyapunovArgs),
    /// Drive-response synchronization tables.
    Sync(sync::SyncArgs),
    /// Bit error rate runs, histograms, sweeps and threshold scans.
    Ber(ber::BerArgs),
    /// Compress a WAV/PGM file and write the masked transmission.
    SendFile(files::SendArgs),
    /// Receive a masked transmission and reconstruct the file.
    RecvFile(files::RecvArgs),
    /// Short end-to-end checks at a fixed seed.
    Selftest,
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    match &cli.command {
        Command::Map(a) => map::run(&cfg, a),
        Command::Lyapunov(a) => lyapunov::run(&cfg, a),
        Command::Sync(a) => sync::run(&cfg, a),
        Command::Ber(a) => ber::run(&cfg, a),
        Command::SendFile(a) => files::send(&cfg, a),
        Command::RecvFile(a) => files::recv(&cfg, a),
        Command::Selftest => selftest::run(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e) as u8)
        }
    }
}
