use std::path::PathBuf;

use depthcd::baselines::{self, DEFAULT_MC_DRAWS};
use depthcd::{PointCloud, StudySummary, TestReport, Weighting};
use serde::{Deserialize, Serialize};

use super::Outputs;
use crate::config::{read_flag_file, BaselineConfig, BaselineMethod, Envelope, RunConfig, Vector, BASELINE_NAMES};
use crate::data;
use crate::error::{parse_choice, CliError, CliResult};
use crate::output;

#[derive(clap::Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Args {
    /// Study CSV files. A file with the study column holds several studies.
    #[serde(default)]
    pub files: Vec<PathBuf>,
    /// Name of the study-label column [default: study].
    #[arg(long)]
    pub study_column: Option<String>,
    /// gd, jk, clt, hotelling, naive-z or ho.
    #[arg(long)]
    pub method: Option<String>,
    /// Hypothesized common mean, comma separated. The correlation tests
    /// always test zero correlation.
    #[arg(long, allow_hyphen_values = true)]
    pub null: Option<Vector>,
    /// Seed of the Monte Carlo null for gd and jk [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo null draws for gd and jk [default: 100000].
    #[arg(long)]
    pub mc_draws: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn resolve(mut a: Args) -> CliResult<(BaselineConfig, Outputs)> {
    if let Some(path) = a.config.take() {
        let f: Args = read_flag_file(&path)?;
        if a.files.is_empty() {
            a.files = f.files;
        }
        a.study_column = a.study_column.or(f.study_column);
        a.method = a.method.or(f.method);
        a.null = a.null.or(f.null);
        a.seed = a.seed.or(f.seed);
        a.mc_draws = a.mc_draws.or(f.mc_draws);
    }
    if a.files.is_empty() {
        return Err(CliError::usage("at least one study file is required"));
    }
    let method: BaselineMethod = parse_choice(
        &a.method.ok_or_else(|| CliError::usage("--method is required"))?,
        &BASELINE_NAMES,
        "method",
    )?;
    let correlation = matches!(method, BaselineMethod::NaiveZ | BaselineMethod::Ho);
    match &a.null {
        None if !correlation => return Err(CliError::usage("--null is required for mean tests")),
        Some(v) if correlation && v.0 != [0.0] => {
            return Err(CliError::usage("the correlation tests only test zero correlation"))
        }
        _ => {}
    }
    let config = BaselineConfig {
        files: a.files,
        study_column: a.study_column.unwrap_or_else(|| "study".into()),
        method,
        null: a.null.map(|v| v.0),
        seed: a.seed.unwrap_or(super::fuse::DEFAULT_SEED),
        mc_draws: a.mc_draws.unwrap_or(DEFAULT_MC_DRAWS),
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
    super::execute(&RunConfig::Baseline(c), &outputs)
}

#[derive(Serialize)]
struct BaselineReport {
    studies: Vec<String>,
    ns: Vec<usize>,
    #[serde(flatten)]
    test: TestReport,
}

fn pooled(clouds: &[&PointCloud]) -> CliResult<PointCloud> {
    let dim = clouds[0].dim();
    let flat: Vec<f64> = clouds.iter().flat_map(|c| c.as_flat().iter().copied()).collect();
    Ok(PointCloud::from_flat(dim, flat)?)
}

pub fn execute(c: &BaselineConfig, config: &RunConfig, outputs: &Outputs) -> CliResult<()> {
    let studies = data::read_studies(&c.files, &c.study_column)?;
    data::check_study_sizes(&studies)?;
    let dim = studies[0].cloud.dim();
    if let Some(s) = studies.iter().find(|s| s.cloud.dim() != dim) {
        return Err(CliError::dimension(format!(
            "study `{}` has {} columns but `{}` has {dim}",
            s.name,
            s.cloud.dim(),
            studies[0].name
        )));
    }
    let clouds: Vec<&PointCloud> = studies.iter().map(|s| &s.cloud).collect();
    let mu0 = c.null.as_deref().unwrap_or(&[0.0]);
    let summaries = || {
        clouds
            .iter()
            .map(|c| StudySummary::from_sample(c))
            .collect::<depthcd::Result<Vec<_>>>()
    };
    let report = match c.method {
        BaselineMethod::Gd => baselines::gd_test(&summaries()?, mu0, Weighting::Gd, c.mc_draws, c.seed)?,
        BaselineMethod::Jk => baselines::gd_test(&summaries()?, mu0, Weighting::Jk, c.mc_draws, c.seed)?,
        BaselineMethod::Clt => baselines::clt_test(&summaries()?, mu0)?,
        BaselineMethod::Hotelling => baselines::hotelling_t2(&pooled(&clouds)?, mu0)?,
        BaselineMethod::NaiveZ => baselines::fisher_z_naive(&pooled(&clouds)?)?,
        BaselineMethod::Ho => {
            let owned: Vec<PointCloud> = clouds.iter().map(|&c| c.clone()).collect();
            baselines::hedges_olkin(&owned)?
        }
    };
    println!(
        "{:<10} statistic {:.6}  p-value {:.6}",
        report.method, report.statistic, report.pvalue
    );
    if let Some(out) = &outputs.out {
        let r = BaselineReport {
            studies: studies.iter().map(|s| s.name.clone()).collect(),
            ns: studies.iter().map(|s| s.cloud.len()).collect(),
            test: report,
        };
        output::write_json(out, &Envelope::new(config, r))?;
    }
    Ok(())
}
