use std::path::PathBuf;

use super::Outputs;
use crate::config::read_run_config;
use crate::error::CliResult;

#[derive(clap::Args)]
pub struct Args {
    /// A JSON output of an earlier run, or a TOML run config with a
    /// `command` key.
    pub source: PathBuf,
    /// Destination: a file for depth, fuse and baseline, a directory for
    /// simulate and synth.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Region grid CSV (fuse with a region).
    #[arg(long)]
    pub region_csv: Option<PathBuf>,
}

pub fn run(a: Args) -> CliResult<()> {
    let config = read_run_config(&a.source)?;
    super::execute(
        &config,
        &Outputs {
            out: a.out,
            region_csv: a.region_csv,
        },
    )
}
