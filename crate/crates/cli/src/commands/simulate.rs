use std::path::PathBuf;

use depthcd::cd::TOrientation;
use depthcd::depth::TieRule;
use depthcd::simlab::{self, Method, Operation, ScenarioKind, ScenarioSpec, SimOutput, SCENARIO_NAMES};
use serde::Deserialize;

use super::Outputs;
use crate::config::{read_flag_file, Envelope, RunConfig, SimulateConfig};
use crate::error::{parse_choice, unknown_choice, CliError, CliResult};
use crate::output;

const METHOD_NAMES: [&str; 6] = ["cd", "gd", "jk", "clt", "naive", "ho"];
const TASK_NAMES: [&str; 4] = ["calibration", "estimation", "hetero", "correlation"];

#[derive(clap::Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Args {
    /// normal, chisq, cauchy, corr-normal, corr-normal-chisq or hetero-sum.
    pub scenario: Option<String>,
    /// Same as the positional scenario.
    #[arg(long = "scenario", value_name = "SCENARIO", conflicts_with = "scenario")]
    #[serde(skip)]
    pub scenario_flag: Option<String>,
    /// calibration, estimation, hetero or correlation [default: by scenario].
    #[arg(long)]
    pub task: Option<String>,
    /// Bootstrap replicates per study.
    #[arg(long = "B")]
    pub b: Option<usize>,
    /// Monte Carlo replications.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Observations per study.
    #[arg(long)]
    pub n: Option<usize>,
    /// Studies per replication.
    #[arg(long)]
    pub k: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated methods, e.g. cd,gd,jk,clt.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub methods: Vec<String>,
    /// Sum studies observe the squared sum (hetero-sum only).
    #[arg(long)]
    #[serde(default)]
    pub squared: bool,
    /// Monte Carlo null draws for gd and jk.
    #[arg(long)]
    pub mc_draws: Option<usize>,
    /// strict or weak [default: weak].
    #[arg(long)]
    pub tie_rule: Option<String>,
    /// reflected or direct [default: reflected].
    #[arg(long)]
    pub t_orientation: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory for the CSV tables and manifest.json.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn resolve(mut a: Args) -> CliResult<(SimulateConfig, Outputs)> {
    a.scenario = a.scenario.or(a.scenario_flag.take());
    if let Some(path) = a.config.take() {
        let f: Args = read_flag_file(&path)?;
        a.scenario = a.scenario.or(f.scenario);
        a.task = a.task.or(f.task);
        a.b = a.b.or(f.b);
        a.reps = a.reps.or(f.reps);
        a.n = a.n.or(f.n);
        a.k = a.k.or(f.k);
        a.seed = a.seed.or(f.seed);
        if a.methods.is_empty() {
            a.methods = f.methods;
        }
        a.squared |= f.squared;
        a.mc_draws = a.mc_draws.or(f.mc_draws);
        a.tie_rule = a.tie_rule.or(f.tie_rule);
        a.t_orientation = a.t_orientation.or(f.t_orientation);
    }
    let name = a.scenario.ok_or_else(|| CliError::usage("a scenario is required"))?;
    let kind: ScenarioKind = parse_choice(&name, &SCENARIO_NAMES, "scenario")?;
    let mut spec = ScenarioSpec::new(kind);
    let task = match a.task {
        None => Operation::default_for(kind),
        Some(t) => match t.to_ascii_lowercase().as_str() {
            "calibration" => Operation::Calibration,
            "estimation" => Operation::Estimation,
            "hetero" => Operation::Hetero,
            "correlation" => Operation::Correlation,
            _ => return Err(unknown_choice(&t, &TASK_NAMES, "task")),
        },
    };
    if let Some(b) = a.b {
        spec.b = b;
    }
    if let Some(reps) = a.reps {
        spec.reps = reps;
    }
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(k) = a.k {
        spec.k = k;
    }
    if let Some(seed) = a.seed {
        spec.master_seed = seed;
    }
    if !a.methods.is_empty() {
        spec.methods = a
            .methods
            .iter()
            .map(|m| parse_choice::<Method, _>(m, &METHOD_NAMES, "method"))
            .collect::<CliResult<_>>()?;
    }
    spec.squared = a.squared;
    if let Some(m) = a.mc_draws {
        spec.mc_draws = m;
    }
    if let Some(t) = a.tie_rule {
        spec.tie_rule = parse_choice::<TieRule, _>(&t, &["strict", "weak"], "tie rule")?;
    }
    if let Some(t) = a.t_orientation {
        spec.t_orientation = parse_choice::<TOrientation, _>(&t, &["reflected", "direct"], "orientation")?;
    }
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    check_task(task, kind)?;
    Ok((
        SimulateConfig { task, spec },
        Outputs {
            out: a.out,
            region_csv: None,
        },
    ))
}

fn check_task(task: Operation, kind: ScenarioKind) -> CliResult<()> {
    let ok = match task {
        Operation::Calibration | Operation::Estimation => !kind.is_correlation() && kind != ScenarioKind::HeteroSum,
        Operation::Correlation => kind.is_correlation(),
        Operation::Hetero => kind == ScenarioKind::HeteroSum,
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "task {task:?} does not apply to scenario `{kind}`"
        )))
    }
}

pub fn run(a: Args) -> CliResult<()> {
    let (c, outputs) = resolve(a)?;
    super::execute(&RunConfig::Simulate(c), &outputs)
}

pub fn execute(c: &SimulateConfig, config: &RunConfig, outputs: &Outputs) -> CliResult<()> {
    let result = simlab::run(c.task, &c.spec)?;
    eprintln!(
        "{} replications ({} failed) in {:.1?}",
        result.reps(),
        result.failed(),
        result.elapsed()
    );
    match &result {
        SimOutput::Calibration(t) => {
            print!("{:<8}", "level");
            for l in &t.levels {
                print!(" {l:>5.2}");
            }
            println!();
            for (m, row) in t.methods.iter().zip(&t.ecdf) {
                print!("{:<8}", m.name());
                for v in row {
                    print!(" {v:>5.3}");
                }
                println!();
            }
        }
        SimOutput::Estimates(e) => {
            println!("truth {:?}", e.truth);
            for s in &e.summaries {
                println!("{:<8} bias {:?}  sd {:?}", s.method.name(), s.bias, s.sd);
            }
        }
    }
    if let Some(dir) = &outputs.out {
        std::fs::create_dir_all(dir)?;
        match &result {
            SimOutput::Calibration(t) => {
                output::write_atomic(&dir.join("calibration.csv"), |w| Ok(t.write_csv(w)?))?;
                output::write_atomic(&dir.join("pvalues.csv"), |w| Ok(t.write_pvalues_csv(w)?))?;
                output::write_json(&dir.join("manifest.json"), &Envelope::new(config, t))?;
            }
            SimOutput::Estimates(e) => {
                output::write_atomic(&dir.join("estimates.csv"), |w| Ok(e.write_csv(w)?))?;
                output::write_json(&dir.join("manifest.json"), &Envelope::new(config, e))?;
            }
        }
    }
    Ok(())
}
