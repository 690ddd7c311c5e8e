//! Seeded Monte Carlo experiments for the common-mean and correlation
//! problems: null calibration of p-values, point-estimate comparisons and the
//! gain from studies that observe only a function of the parameter.
//!
//! Replication `i` draws its data from streams keyed by the master seed, the
//! scenario and `i`, so every table is identical for any thread count.

mod scenario;

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, GdNull, StudySummary, Weighting};
use crate::cd::{self, BootstrapTOptions, CdKind, DepthCD, Estimator, Provenance};
use crate::cloud::PointCloud;
use crate::depth::{self, DepthPolicy};
use crate::error::{Error, Result};
use crate::fusion::{combined_mce, CombinedCV, FusionScheme, ParamMap, SearchSpec, Study};
use crate::rng;

pub use scenario::{Method, ScenarioKind, ScenarioSpec, SCENARIO_NAMES};

pub const NOMINAL_LEVELS: [f64; 10] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Empirical null CDF of each method's p-values at [`NOMINAL_LEVELS`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub scenario: ScenarioKind,
    pub levels: Vec<f64>,
    pub methods: Vec<Method>,
    /// `ecdf[m][l]`: fraction of p-values of `methods[m]` at or below `levels[l]`.
    pub ecdf: Vec<Vec<f64>>,
    /// Replications that produced p-values.
    pub reps: usize,
    pub failed: usize,
    /// Replication index of each entry of `pvalues[m]`.
    #[serde(skip)]
    pub rep_index: Vec<usize>,
    #[serde(skip)]
    pub pvalues: Vec<Vec<f64>>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CalibrationTable {
    pub fn row(&self, method: Method) -> Option<&[f64]> {
        let m = self.methods.iter().position(|&x| x == method)?;
        Some(&self.ecdf[m])
    }

    /// Empirical CDF of `method` at a nominal level in the grid.
    pub fn at(&self, method: Method, level: f64) -> Option<f64> {
        let l = self.levels.iter().position(|&x| (x - level).abs() < 1e-12)?;
        self.row(method).map(|r| r[l])
    }

    pub fn pvalues(&self, method: Method) -> Option<&[f64]> {
        let m = self.methods.iter().position(|&x| x == method)?;
        Some(&self.pvalues[m])
    }

    /// `method,nominal,empirical`, one row per method and level.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["method", "nominal", "empirical"])?;
        for (m, row) in self.methods.iter().zip(&self.ecdf) {
            for (l, v) in self.levels.iter().zip(row) {
                w.write_record([m.name().to_string(), l.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `rep,method,pvalue`, one row per successful replication and method.
    pub fn write_pvalues_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rep", "method", "pvalue"])?;
        for (r, &rep) in self.rep_index.iter().enumerate() {
            for (m, p) in self.methods.iter().zip(&self.pvalues) {
                w.write_record([rep.to_string(), m.name().to_string(), p[r].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub method: Method,
    pub mean: Vec<f64>,
    pub bias: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Per-replication point estimates of each method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateSample {
    pub scenario: ScenarioKind,
    pub truth: Vec<f64>,
    pub methods: Vec<Method>,
    /// `estimates[m][r]` is the estimate of `methods[m]` in replication `rep_index[r]`.
    #[serde(skip)]
    pub estimates: Vec<Vec<Vec<f64>>>,
    #[serde(skip)]
    pub rep_index: Vec<usize>,
    pub summaries: Vec<EstimateSummary>,
    pub reps: usize,
    pub failed: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl EstimateSample {
    pub fn summary(&self, method: Method) -> Option<&EstimateSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// `rep,method,theta_1..theta_p`, one row per replication and method.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let p = self.truth.len();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["rep".to_string(), "method".to_string()];
        header.extend((1..=p).map(|j| format!("theta_{j}")));
        w.write_record(&header)?;
        for (r, &rep) in self.rep_index.iter().enumerate() {
            for (m, est) in self.methods.iter().zip(&self.estimates) {
                let mut rec = vec![rep.to_string(), m.name().to_string()];
                rec.extend(est[r].iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    Calibration,
    Estimation,
    Hetero,
    Correlation,
}

impl Operation {
    /// The operation a scenario runs when none is named: calibration for the
    /// common-mean kinds.
    pub fn default_for(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::HeteroSum => Operation::Hetero,
            k if k.is_correlation() => Operation::Correlation,
            _ => Operation::Calibration,
        }
    }
}

#[derive(Debug, Clone)]
pub enum SimOutput {
    Calibration(CalibrationTable),
    Estimates(EstimateSample),
}

impl SimOutput {
    pub fn reps(&self) -> usize {
        match self {
            SimOutput::Calibration(t) => t.reps,
            SimOutput::Estimates(e) => e.reps,
        }
    }

    pub fn failed(&self) -> usize {
        match self {
            SimOutput::Calibration(t) => t.failed,
            SimOutput::Estimates(e) => e.failed,
        }
    }

    pub fn elapsed(&self) -> Duration {
        match self {
            SimOutput::Calibration(t) => t.elapsed,
            SimOutput::Estimates(e) => e.elapsed,
        }
    }
}

pub fn run(operation: Operation, spec: &ScenarioSpec) -> Result<SimOutput> {
    Ok(match operation {
        Operation::Calibration => SimOutput::Calibration(run_calibration(spec)?),
        Operation::Correlation => SimOutput::Calibration(run_correlation(spec)?),
        Operation::Estimation => SimOutput::Estimates(run_estimation(spec)?),
        Operation::Hetero => SimOutput::Estimates(run_hetero(spec)?),
    })
}

/// Estimator and bootstrap flavour of the CD method in each scenario.
fn cd_recipe(spec: &ScenarioSpec) -> (Estimator, bool) {
    match spec.kind {
        ScenarioKind::Normal | ScenarioKind::ChiSq | ScenarioKind::HeteroSum => (Estimator::Mean, true),
        ScenarioKind::Cauchy => (Estimator::CoordinatewiseMedian, false),
        ScenarioKind::CorrNormal | ScenarioKind::CorrNormalChiSq => (Estimator::PearsonCorrelation, false),
    }
}

fn cd_draws(spec: &ScenarioSpec, sample: &PointCloud, seed: u64) -> Result<PointCloud> {
    let (est, studentize) = cd_recipe(spec);
    if studentize {
        let options = BootstrapTOptions {
            orientation: spec.t_orientation,
            ..Default::default()
        };
        cd::bootstrap_t_draws(sample, &est, spec.b, seed, options)
    } else {
        cd::bootstrap_draws(sample, &est, spec.b, seed)
    }
}

fn study_seed(rep_seed: u64, study: usize) -> u64 {
    rng::derive_seed(&[rep_seed, 1 + study as u64])
}

struct Outcomes<T> {
    values: Vec<T>,
    rep_index: Vec<usize>,
    failed: usize,
}

/// Runs `body` on each replication's samples. A failing replication is
/// redrawn once; more than `reps / 1000` failures abort the run.
fn replicate<T, F>(spec: &ScenarioSpec, body: F) -> Result<Outcomes<T>>
where
    T: Send,
    F: Fn(&[PointCloud], u64) -> Result<T> + Sync,
{
    spec.validate()?;
    let base = rng::derive_seed(&[spec.master_seed, spec.kind.id(), spec.squared as u64]);
    let results: Vec<Option<T>> = (0..spec.reps)
        .into_par_iter()
        .map(|i| {
            for attempt in 0..2u64 {
                let seed = rng::derive_seed(&[base, i as u64, attempt]);
                let samples: Vec<PointCloud> = (0..spec.k)
                    .map(|s| spec.sample(s, &mut rng::stream(seed, s as u64)))
                    .collect();
                match body(&samples, seed) {
                    Ok(v) => return Some(v),
                    Err(e) => log::warn!("replication {i} attempt {attempt} failed: {e}"),
                }
            }
            None
        })
        .collect();
    let mut out = Outcomes {
        values: Vec::with_capacity(spec.reps),
        rep_index: Vec::with_capacity(spec.reps),
        failed: 0,
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Some(v) => {
                out.values.push(v);
                out.rep_index.push(i);
            }
            None => out.failed += 1,
        }
    }
    let limit = spec.reps / 1000;
    if out.failed > limit {
        return Err(Error::TooManyFailures {
            failed: out.failed,
            reps: spec.reps,
            limit,
        });
    }
    Ok(out)
}

/// Fused CD p-value of the null: per-study centralities of `truth` under
/// half-space depth, floored at `1/(B+1)`, combined by Fisher's rule.
fn cd_pvalue(spec: &ScenarioSpec, samples: &[PointCloud], seed: u64, truth: &[f64]) -> Result<f64> {
    let policy = DepthPolicy::halfspace().with_tie_rule(spec.tie_rule);
    let floor = 1.0 / (spec.b as f64 + 1.0);
    let u = samples
        .iter()
        .enumerate()
        .map(|(s, x)| {
            let draws = cd_draws(spec, x, study_seed(seed, s))?;
            Ok(depth::centrality(&draws, truth, &policy)?.max(floor))
        })
        .collect::<Result<Vec<f64>>>()?;
    FusionScheme::fisher().combine(&u)
}

fn calibrate(spec: &ScenarioSpec) -> Result<CalibrationTable> {
    let start = Instant::now();
    spec.validate()?;
    let truth = spec.truth();
    let base = rng::derive_seed(&[spec.master_seed, spec.kind.id(), u64::MAX]);
    let ns = vec![spec.n; spec.k];
    let mut nulls = Vec::new();
    for (tag, (m, w)) in [(Method::Gd, Weighting::Gd), (Method::Jk, Weighting::Jk)]
        .into_iter()
        .enumerate()
    {
        if spec.methods.contains(&m) {
            let seed = rng::derive_seed(&[base, tag as u64]);
            nulls.push((m, GdNull::new(truth.len(), &ns, w, spec.mc_draws, seed)?));
        }
    }
    let null_of = |m: Method| nulls.iter().find(|(x, _)| *x == m).map(|(_, n)| n);

    let out = replicate(spec, |samples, seed| {
        let summaries = || {
            samples
                .iter()
                .map(StudySummary::from_sample)
                .collect::<Result<Vec<_>>>()
        };
        spec.methods
            .iter()
            .map(|&m| match m {
                Method::Cd => cd_pvalue(spec, samples, seed, &truth),
                Method::Gd | Method::Jk => Ok(null_of(m).expect("null law built").test(&summaries()?, &truth)?.pvalue),
                Method::Clt => Ok(baselines::clt_test(&summaries()?, &truth)?.pvalue),
                Method::Naive => {
                    let flat: Vec<f64> = samples.iter().flat_map(|s| s.as_flat().iter().copied()).collect();
                    Ok(baselines::fisher_z_naive(&PointCloud::from_flat(2, flat)?)?.pvalue)
                }
                Method::Ho => Ok(baselines::hedges_olkin(samples)?.pvalue),
            })
            .collect::<Result<Vec<f64>>>()
    })?;

    let pvalues: Vec<Vec<f64>> = (0..spec.methods.len())
        .map(|m| out.values.iter().map(|r| r[m]).collect())
        .collect();
    let reps = out.values.len();
    let ecdf = pvalues
        .iter()
        .map(|ps| {
            NOMINAL_LEVELS
                .iter()
                .map(|&l| ps.iter().filter(|&&p| p <= l).count() as f64 / reps as f64)
                .collect()
        })
        .collect();
    Ok(CalibrationTable {
        scenario: spec.kind,
        levels: NOMINAL_LEVELS.to_vec(),
        methods: spec.methods.clone(),
        ecdf,
        reps,
        failed: out.failed,
        rep_index: out.rep_index,
        pvalues,
        elapsed: start.elapsed(),
    })
}

/// Null p-value calibration for the common-mean scenarios
/// (`Normal`, `ChiSq`, `Cauchy`).
pub fn run_calibration(spec: &ScenarioSpec) -> Result<CalibrationTable> {
    if !matches!(
        spec.kind,
        ScenarioKind::Normal | ScenarioKind::ChiSq | ScenarioKind::Cauchy
    ) {
        return Err(Error::InvalidArgument(format!(
            "calibration runs need normal, chisq or cauchy, got `{}`",
            spec.kind
        )));
    }
    calibrate(spec)
}

/// Null calibration of correlation meta-analysis, `H0: rho = 0`.
pub fn run_correlation(spec: &ScenarioSpec) -> Result<CalibrationTable> {
    if !spec.kind.is_correlation() {
        return Err(Error::InvalidArgument(format!(
            "correlation runs need corr-normal or corr-normal-chisq, got `{}`",
            spec.kind
        )));
    }
    calibrate(spec)
}

/// The studies of one replication as fusion inputs. Studies observing only
/// the sum of the pair enter through the map `theta -> theta_1 + theta_2`.
pub fn replication_studies(spec: &ScenarioSpec, samples: &[PointCloud], seed: u64) -> Result<Vec<Study>> {
    let policy = DepthPolicy::halfspace().with_tie_rule(spec.tie_rule);
    let (est, studentize) = cd_recipe(spec);
    samples
        .iter()
        .enumerate()
        .map(|(s, x)| {
            let bseed = study_seed(seed, s);
            let draws = cd_draws(spec, x, bseed)?;
            let provenance = Provenance {
                estimator: est.name(),
                kind: if studentize {
                    CdKind::BootstrapT
                } else {
                    CdKind::Bootstrap
                },
                replicates: spec.b,
                seed: Some(bseed),
            };
            let cd = DepthCD::from_draws(draws, &policy, provenance)?;
            let map = if x.dim() < spec.truth().len() {
                ParamMap::linear(1, 2, vec![1.0, 1.0])?
            } else {
                ParamMap::Identity
            };
            Study::new(cd, map, x.len())
        })
        .collect()
}

fn estimate(spec: &ScenarioSpec) -> Result<EstimateSample> {
    let start = Instant::now();
    spec.validate()?;
    let methods: Vec<Method> = spec
        .methods
        .iter()
        .copied()
        .filter(|m| matches!(m, Method::Gd | Method::Cd))
        .collect();
    if methods.is_empty() {
        return Err(Error::InvalidArgument(
            "estimation compares the gd and cd methods".into(),
        ));
    }
    let complete = spec.complete_studies();
    let search = SearchSpec::default();
    let out = replicate(spec, |samples, seed| {
        methods
            .iter()
            .map(|&m| match m {
                Method::Gd => {
                    let s = samples[..complete]
                        .iter()
                        .map(StudySummary::from_sample)
                        .collect::<Result<Vec<_>>>()?;
                    baselines::graybill_deal(&s)
                }
                _ => {
                    let ccv = CombinedCV::new(replication_studies(spec, samples, seed)?, FusionScheme::fisher())?;
                    Ok(combined_mce(&ccv, &search)?.theta)
                }
            })
            .collect::<Result<Vec<Vec<f64>>>>()
    })?;

    let truth = spec.truth();
    let p = truth.len();
    let estimates: Vec<Vec<Vec<f64>>> = (0..methods.len())
        .map(|m| out.values.iter().map(|r| r[m].clone()).collect())
        .collect();
    let summaries = methods
        .iter()
        .zip(&estimates)
        .map(|(&method, est)| {
            let r = est.len() as f64;
            let mean: Vec<f64> = (0..p).map(|j| est.iter().map(|e| e[j]).sum::<f64>() / r).collect();
            let sd = (0..p)
                .map(|j| (est.iter().map(|e| (e[j] - mean[j]).powi(2)).sum::<f64>() / (r - 1.0)).sqrt())
                .collect();
            let bias = mean.iter().zip(&truth).map(|(m, t)| m - t).collect();
            EstimateSummary { method, mean, bias, sd }
        })
        .collect();
    Ok(EstimateSample {
        scenario: spec.kind,
        truth,
        methods,
        estimates,
        rep_index: out.rep_index,
        summaries,
        reps: out.values.len(),
        failed: out.failed,
        elapsed: start.elapsed(),
    })
}

/// GD estimate versus the maximum-centrality estimate of the fused CD.
pub fn run_estimation(spec: &ScenarioSpec) -> Result<EstimateSample> {
    if !matches!(
        spec.kind,
        ScenarioKind::Normal | ScenarioKind::ChiSq | ScenarioKind::Cauchy
    ) {
        return Err(Error::InvalidArgument(format!(
            "estimation runs need normal, chisq or cauchy, got `{}`",
            spec.kind
        )));
    }
    estimate(spec)
}

/// Fused CD of all studies, including those observing only the sum, versus
/// GD on the complete studies alone.
pub fn run_hetero(spec: &ScenarioSpec) -> Result<EstimateSample> {
    if spec.kind != ScenarioKind::HeteroSum {
        return Err(Error::InvalidArgument(format!(
            "hetero runs need hetero-sum, got `{}`",
            spec.kind
        )));
    }
    estimate(spec)
}
