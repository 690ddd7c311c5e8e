//! `depthcd`: depth-CD inference, fusion, classical baselines and
//! simulation studies from the command line.

mod commands;
mod config;
mod data;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{baseline, depth, fuse, replay, simulate, synth};
use error::{code, CliError};

#[derive(Parser)]
#[command(
    name = "depthcd",
    version,
    about = "Depth confidence distributions and their fusion across studies"
)]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "DEPTHCD_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Depth and centrality of a point with respect to a data cloud.
    Depth(depth::Args),
    /// Per-study depth-CDs and their combination.
    Fuse(fuse::Args),
    /// Classical comparators: Graybill-Deal, CLT, Hotelling, Fisher z.
    Baseline(baseline::Args),
    /// Monte Carlo calibration and estimation studies.
    Simulate(simulate::Args),
    /// Synthetic data sets.
    Synth(synth::Args),
    /// Rerun the config recorded in an output file or a TOML run config.
    Replay(replay::Args),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::new(code::FAILURE, e.to_string()))?;
    }
    match cli.command {
        Command::Depth(a) => depth::run(a),
        Command::Fuse(a) => fuse::run(a),
        Command::Baseline(a) => baseline::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Synth(a) => synth::run(a),
        Command::Replay(a) => replay::run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(code::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
