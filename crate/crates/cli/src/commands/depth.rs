use std::path::PathBuf;

use depthcd::depth::{self, DepthKind, DepthPolicy, TieRule};
use serde::{Deserialize, Serialize};

use super::Outputs;
use crate::config::{read_flag_file, DepthConfig, Envelope, RunConfig, Vector};
use crate::data;
use crate::error::{parse_choice, CliError, CliResult};
use crate::output;

pub const DEPTH_NAMES: [&str; 3] = ["halfspace", "simplicial", "mahalanobis"];

#[derive(clap::Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Args {
    /// CSV data file with a header row.
    pub file: Option<PathBuf>,
    /// Query point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<Vector>,
    /// halfspace, simplicial or mahalanobis.
    #[arg(long)]
    pub depth: Option<String>,
    /// strict or weak.
    #[arg(long)]
    pub tie_rule: Option<String>,
    /// TOML file of flag values; flags given here win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn resolve(mut a: Args) -> CliResult<(DepthConfig, Outputs)> {
    if let Some(path) = a.config.take() {
        let f: Args = read_flag_file(&path)?;
        a.file = a.file.or(f.file);
        a.point = a.point.or(f.point);
        a.depth = a.depth.or(f.depth);
        a.tie_rule = a.tie_rule.or(f.tie_rule);
    }
    let config = DepthConfig {
        file: a.file.ok_or_else(|| CliError::usage("a data file is required"))?,
        point: a.point.ok_or_else(|| CliError::usage("--point is required"))?.0,
        depth: a
            .depth
            .map_or(Ok(DepthKind::HalfSpace), |d| parse_choice(&d, &DEPTH_NAMES, "depth"))?,
        tie_rule: a.tie_rule.map_or(Ok(TieRule::Strict), |t| {
            parse_choice(&t, &["strict", "weak"], "tie rule")
        })?,
    };
    Ok((
        config,
        Outputs {
            out: a.out,
            region_csv: None,
        },
    ))
}

pub fn run(a: Args) -> CliResult<()> {
    let (c, outputs) = resolve(a)?;
    super::execute(&RunConfig::Depth(c), &outputs)
}

#[derive(Serialize)]
struct DepthReport {
    n: usize,
    dim: usize,
    depth: f64,
    centrality: f64,
}

pub fn execute(c: &DepthConfig, config: &RunConfig, outputs: &Outputs) -> CliResult<()> {
    let study = data::read_cloud(&c.file)?;
    let cloud = &study.cloud;
    if c.point.len() != cloud.dim() {
        return Err(CliError::dimension(format!(
            "point has {} coordinates but {} has {} columns",
            c.point.len(),
            c.file.display(),
            cloud.dim()
        )));
    }
    let policy = DepthPolicy::new(c.depth).with_tie_rule(c.tie_rule);
    let d = depth::depth(cloud, &c.point, &policy)?.value();
    let centrality = depth::centrality(cloud, &c.point, &policy)?;
    println!("depth      {d}");
    println!("centrality {centrality}");
    if let Some(out) = &outputs.out {
        let report = DepthReport {
            n: cloud.len(),
            dim: cloud.dim(),
            depth: d,
            centrality,
        };
        output::write_json(out, &Envelope::new(config, report))?;
    }
    Ok(())
}
