//! `genmetrics`: compare embedding sets and run the synthetic experiments.

mod args;
mod commands;

use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;

use crate::args::{Cli, Command};

const THREADS_VAR: &str = "GENMETRICS_THREADS";

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let requested: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_VAR}={raw:?} is not a positive integer"))?;
    if requested == 0 {
        bail!("{THREADS_VAR} must be at least 1");
    }
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let threads = requested.min(available);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    log::info!("using {threads} worker threads");
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Compute(a) => commands::compute(a),
        Command::Normality(a) => commands::normality(a),
        Command::Mog(a) => commands::mog(a),
        Command::SampleEfficiency(a) => commands::sample_efficiency(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
