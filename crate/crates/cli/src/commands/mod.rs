pub mod baseline;
pub mod depth;
pub mod fuse;
pub mod replay;
pub mod simulate;
pub mod synth;

use std::path::PathBuf;

use crate::config::RunConfig;
use crate::error::CliResult;

/// Where results go. Kept apart from the config so that a replay can write
/// elsewhere and still produce identical bytes.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub out: Option<PathBuf>,
    pub region_csv: Option<PathBuf>,
}

pub fn execute(config: &RunConfig, outputs: &Outputs) -> CliResult<()> {
    match config {
        RunConfig::Depth(c) => depth::execute(c, config, outputs),
        RunConfig::Fuse(c) => fuse::execute(c, config, outputs),
        RunConfig::Baseline(c) => baseline::execute(c, config, outputs),
        RunConfig::Simulate(c) => simulate::execute(c, config, outputs),
        RunConfig::Synth(c) => synth::execute(c, config, outputs),
    }
}
