//! Synthetic two-fleet landing data: threshold-crossing height and
//! touchdown distance. Distances are right-skewed, and the Boeing sample is
//! truncated on the right: distances beyond `mean + 1.5 sd` of its
//! untruncated law are redrawn, so its realized mean sits below the stated
//! one.

use std::path::{Path, PathBuf};

use depthcd::rng::{derive_seed, stream};
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Outputs;
use crate::config::{read_flag_file, Envelope, RunConfig, SynthConfig};
use crate::error::{unknown_choice, CliError, CliResult};
use crate::output;

const KINDS: [&str; 1] = ["faa-like"];
const DEFAULT_SEED: u64 = 2024;
const AIRBUS_N: usize = 820;
const BOEING_N: usize = 1976;
/// Shape of the gamma law behind the distance skew.
const DISTANCE_SHAPE: f64 = 4.0;
const HEIGHT_DISTANCE_CORRELATION: f64 = 0.3;

#[derive(Debug, Clone, Copy, Serialize)]
struct Fleet {
    name: &'static str,
    /// Mean and sd of the untruncated law of `(height, distance)`.
    mean: [f64; 2],
    sd: [f64; 2],
    /// Right truncation of the distance, in sd units above the mean.
    distance_cap: Option<f64>,
}

const AIRBUS: Fleet = Fleet {
    name: "airbus",
    mean: [16.05, 424.0],
    sd: [3.2, 150.0],
    distance_cap: None,
};

const BOEING: Fleet = Fleet {
    name: "boeing",
    mean: [16.03, 469.5],
    sd: [3.0, 160.0],
    distance_cap: Some(1.5),
};

#[derive(clap::Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Args {
    /// Data set kind; only faa-like.
    pub kind: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Airbus sample size [default: 820].
    #[arg(long)]
    pub airbus: Option<usize>,
    /// Boeing sample size [default: 1976].
    #[arg(long)]
    pub boeing: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn resolve(mut a: Args) -> CliResult<(SynthConfig, Outputs)> {
    if let Some(path) = a.config.take() {
        let f: Args = read_flag_file(&path)?;
        a.kind = a.kind.or(f.kind);
        a.seed = a.seed.or(f.seed);
        a.airbus = a.airbus.or(f.airbus);
        a.boeing = a.boeing.or(f.boeing);
    }
    let kind = a.kind.unwrap_or_else(|| KINDS[0].into()).to_ascii_lowercase();
    if !KINDS.contains(&kind.as_str()) {
        return Err(unknown_choice(&kind, &KINDS, "data set"));
    }
    let config = SynthConfig {
        kind,
        seed: a.seed.unwrap_or(DEFAULT_SEED),
        airbus: a.airbus.unwrap_or(AIRBUS_N),
        boeing: a.boeing.unwrap_or(BOEING_N),
    };
    if config.airbus < crate::data::MIN_STUDY_ROWS || config.boeing < crate::data::MIN_STUDY_ROWS {
        return Err(CliError::usage(format!(
            "each fleet needs at least {} rows",
            crate::data::MIN_STUDY_ROWS
        )));
    }
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
    super::execute(&RunConfig::Synth(c), &outputs)
}

/// Rows of `(height, distance)`, rounded to two decimals.
fn fleet_rows(fleet: &Fleet, n: usize, seed: u64) -> Vec<[f64; 2]> {
    let gamma = Gamma::new(DISTANCE_SHAPE, 1.0).expect("valid gamma");
    let rho = HEIGHT_DISTANCE_CORRELATION;
    (0..n)
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let g = loop {
                let g: f64 = (rng.sample(gamma) - DISTANCE_SHAPE) / DISTANCE_SHAPE.sqrt();
                if fleet.distance_cap.map_or(true, |cap| g <= cap) {
                    break g;
                }
            };
            let z: f64 = rng.sample(StandardNormal);
            let h = rho * g + (1.0 - rho * rho).sqrt() * z;
            [
                round2(fleet.mean[0] + fleet.sd[0] * h),
                round2(fleet.mean[1] + fleet.sd[1] * g),
            ]
        })
        .collect()
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> CliResult<()> {
    output::write_atomic(path, |w| {
        writeln!(w, "{header}")?;
        for r in rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct SynthReport {
    fleets: Vec<Fleet>,
    distance_shape: f64,
    height_distance_correlation: f64,
    files: Vec<&'static str>,
}

pub fn execute(c: &SynthConfig, config: &RunConfig, outputs: &Outputs) -> CliResult<()> {
    let dir = outputs
        .out
        .as_ref()
        .ok_or_else(|| CliError::usage("--out <DIR> is required"))?;
    std::fs::create_dir_all(dir)?;
    let airbus = fleet_rows(&AIRBUS, c.airbus, derive_seed(&[c.seed, 0]));
    let boeing = fleet_rows(&BOEING, c.boeing, derive_seed(&[c.seed, 1]));
    let pair = |r: &[f64; 2]| format!("{:.2},{:.2}", r[0], r[1]);

    write_rows(&dir.join("airbus.csv"), "height,distance", airbus.iter().map(pair))?;
    write_rows(&dir.join("boeing.csv"), "height,distance", boeing.iter().map(pair))?;
    // The Airbus study without its height column: indirect evidence on the
    // distance coordinate only.
    write_rows(
        &dir.join("airbus_distance.csv"),
        "distance",
        airbus.iter().map(|r| format!("{:.2}", r[1])),
    )?;
    write_rows(
        &dir.join("faa_like.csv"),
        "study,height,distance",
        airbus
            .iter()
            .map(|r| format!("airbus,{}", pair(r)))
            .chain(boeing.iter().map(|r| format!("boeing,{}", pair(r)))),
    )?;
    let files = vec!["airbus.csv", "boeing.csv", "airbus_distance.csv", "faa_like.csv"];
    let report = SynthReport {
        fleets: vec![AIRBUS, BOEING],
        distance_shape: DISTANCE_SHAPE,
        height_distance_correlation: HEIGHT_DISTANCE_CORRELATION,
        files,
    };
    output::write_json(&dir.join("manifest.json"), &Envelope::new(config, report))?;
    println!("wrote {} and {} rows to {}", c.airbus, c.boeing, dir.display());
    Ok(())
}
