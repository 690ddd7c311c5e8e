//! Classical comparators: Graybill-Deal estimation and tests, the CLT
//! chi-square test, Hotelling's T², and Fisher-z correlation pooling.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, FisherF};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;
use crate::stats;

pub const DEFAULT_MC_DRAWS: usize = 100_000;

/// Mean, unbiased covariance and size of one study's sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub mean: Vec<f64>,
    /// Row-major, divisor `n - 1`.
    pub cov: Vec<f64>,
    pub n: usize,
}

impl StudySummary {
    pub fn from_sample(sample: &PointCloud) -> Result<Self> {
        let p = sample.dim();
        if sample.len() <= p {
            return Err(Error::TooFewPoints {
                needed: p + 1,
                found: sample.len(),
            });
        }
        Ok(Self {
            mean: sample.mean(),
            cov: sample.covariance(),
            n: sample.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn cov_matrix(&self) -> DMatrix<f64> {
        linalg::matrix_from_flat(self.dim(), &self.cov)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: String,
    pub statistic: f64,
    pub pvalue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_draws: Option<usize>,
}

impl TestReport {
    fn new(method: &str, statistic: f64, pvalue: f64) -> Self {
        Self {
            method: method.into(),
            statistic,
            pvalue: pvalue.clamp(0.0, 1.0),
            mc_draws: None,
        }
    }
}

fn common_dim(summaries: &[StudySummary]) -> Result<usize> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one study is required".into()))?;
    let p = first.dim();
    for s in summaries {
        if s.dim() != p || s.cov.len() != p * p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: s.dim(),
            });
        }
    }
    Ok(p)
}

fn check_null(mu0: &[f64], p: usize) -> Result<()> {
    if mu0.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: mu0.len(),
        });
    }
    Ok(())
}

/// Precision-weighted pooling of study means,
/// `(sum n_k S_k^{-1})^{-1} sum n_k S_k^{-1} xbar_k`.
pub fn graybill_deal(summaries: &[StudySummary]) -> Result<Vec<f64>> {
    let p = common_dim(summaries)?;
    let mut a = DMatrix::zeros(p, p);
    let mut b = DVector::zeros(p);
    for s in summaries {
        let prec = linalg::inverse_spd(&s.cov_matrix())? * s.n as f64;
        b += &prec * DVector::from_column_slice(&s.mean);
        a += prec;
    }
    Ok(linalg::solve_spd(&a, &b)?.as_slice().to_vec())
}

/// Study weighting in the summed Hotelling statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Unit weights.
    Gd,
    /// Inverse null variance of each T².
    Jk,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gd" => Ok(Self::Gd),
            "jk" | "kj" => Ok(Self::Jk),
            other => Err(Error::InvalidArgument(format!("unknown weighting `{other}`"))),
        }
    }
}

impl Weighting {
    fn label(self) -> &'static str {
        match self {
            Weighting::Gd => "gd",
            Weighting::Jk => "jk",
        }
    }

    /// Weight of a study of size `n` in dimension `p`.
    pub fn weight(self, p: usize, n: usize) -> Result<f64> {
        match self {
            Weighting::Gd => Ok(1.0),
            Weighting::Jk => {
                if n <= p + 4 {
                    return Err(Error::DegreesOfFreedom(format!(
                        "variance weights need n > p + 4 (n = {n}, p = {p})"
                    )));
                }
                let (p, n) = (p as f64, n as f64);
                let var = 2.0 * p * (n - 1.0).powi(2) * (n - 2.0) / ((n - p - 2.0).powi(2) * (n - p - 4.0));
                Ok(1.0 / var)
            }
        }
    }
}

/// Monte Carlo null law of `sum_k w_k T²_k` with independent
/// `T²_k = p (n_k - 1) / (n_k - p) F_{p, n_k - p}`.
#[derive(Debug, Clone)]
pub struct GdNull {
    weighting: Weighting,
    p: usize,
    ns: Vec<usize>,
    weights: Vec<f64>,
    sorted: Vec<f64>,
    seed: u64,
}

impl GdNull {
    pub fn new(p: usize, ns: &[usize], weighting: Weighting, draws: usize, seed: u64) -> Result<Self> {
        if draws == 0 || ns.is_empty() {
            return Err(Error::InvalidArgument("null law needs studies and draws".into()));
        }
        let mut laws = Vec::with_capacity(ns.len());
        let mut weights = Vec::with_capacity(ns.len());
        for &n in ns {
            if n <= p {
                return Err(Error::DegreesOfFreedom(format!("need n > p (n = {n}, p = {p})")));
            }
            let w = weighting.weight(p, n)?;
            let scale = p as f64 * (n - 1) as f64 / (n - p) as f64;
            let f = FisherF::new(p as f64, (n - p) as f64).map_err(|e| Error::DegreesOfFreedom(e.to_string()))?;
            laws.push((w * scale, f));
            weights.push(w);
        }
        let mut sorted: Vec<f64> = (0..draws)
            .into_par_iter()
            .map(|m| {
                let mut g = rng::stream(seed, m as u64);
                laws.iter().map(|(c, f)| c * f.sample(&mut g)).sum()
            })
            .collect();
        sorted.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            weighting,
            p,
            ns: ns.to_vec(),
            weights,
            sorted,
            seed,
        })
    }

    /// Whether this law applies to studies of these sizes.
    pub fn matches(&self, p: usize, ns: &[usize], weighting: Weighting) -> bool {
        self.p == p && self.ns == ns && self.weighting == weighting
    }

    pub fn draws(&self) -> usize {
        self.sorted.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Fraction of null draws at or above `statistic`.
    pub fn pvalue(&self, statistic: f64) -> f64 {
        let below = self.sorted.partition_point(|&v| v < statistic);
        (self.sorted.len() - below) as f64 / self.sorted.len() as f64
    }

    /// The weighted statistic and its p-value.
    pub fn test(&self, summaries: &[StudySummary], mu0: &[f64]) -> Result<TestReport> {
        let p = common_dim(summaries)?;
        check_null(mu0, p)?;
        let ns: Vec<usize> = summaries.iter().map(|s| s.n).collect();
        if !self.matches(p, &ns, self.weighting) {
            return Err(Error::InvalidArgument(
                "null law was built for different study sizes".into(),
            ));
        }
        let mut stat = 0.0;
        for (s, w) in summaries.iter().zip(&self.weights) {
            stat += w * hotelling_statistic(s, mu0)?;
        }
        let mut r = TestReport::new(self.weighting.label(), stat, self.pvalue(stat));
        r.mc_draws = Some(self.draws());
        Ok(r)
    }
}

/// `n (xbar - mu0)' S^{-1} (xbar - mu0)`.
fn hotelling_statistic(s: &StudySummary, mu0: &[f64]) -> Result<f64> {
    let d = DVector::from_iterator(s.dim(), s.mean.iter().zip(mu0).map(|(a, b)| a - b));
    let x = linalg::solve_spd(&s.cov_matrix(), &d)?;
    Ok(s.n as f64 * d.dot(&x))
}

/// Summed Hotelling statistics with GD (unit) or JK (variance) weights,
/// referred to their Monte Carlo null convolution.
pub fn gd_test(
    summaries: &[StudySummary],
    mu0: &[f64],
    weighting: Weighting,
    mc: usize,
    seed: u64,
) -> Result<TestReport> {
    let p = common_dim(summaries)?;
    check_null(mu0, p)?;
    let ns: Vec<usize> = summaries.iter().map(|s| s.n).collect();
    GdNull::new(p, &ns, weighting, mc, seed)?.test(summaries, mu0)
}

/// Large-sample chi-square test built from `Sigma_k = (n_k - 1) S_k / n_k`.
pub fn clt_test(summaries: &[StudySummary], mu0: &[f64]) -> Result<TestReport> {
    let p = common_dim(summaries)?;
    check_null(mu0, p)?;
    let mut a = DMatrix::zeros(p, p);
    let mut v = DVector::zeros(p);
    for s in summaries {
        let n = s.n as f64;
        let sigma = s.cov_matrix() * ((n - 1.0) / n);
        let prec = linalg::inverse_spd(&sigma)? * n;
        v += &prec * DVector::from_iterator(p, s.mean.iter().zip(mu0).map(|(a, b)| a - b));
        a += prec;
    }
    let stat = v.dot(&linalg::solve_spd(&a, &v)?);
    Ok(TestReport::new("clt", stat, stats::chi_squared_sf(stat, p as f64)))
}

/// One-sample Hotelling T² with its exact F reference.
pub fn hotelling_t2(sample: &PointCloud, mu0: &[f64]) -> Result<TestReport> {
    let s = StudySummary::from_sample(sample)?;
    check_null(mu0, s.dim())?;
    let (n, p) = (s.n as f64, s.dim() as f64);
    let t2 = hotelling_statistic(&s, mu0)?;
    let f = (n - p) / (p * (n - 1.0)) * t2;
    Ok(TestReport::new("hotelling", t2, stats::f_sf(f, p, n - p)))
}

fn fisher_z(sample: &PointCloud) -> Result<f64> {
    if sample.len() <= 3 {
        return Err(Error::TooFewPoints {
            needed: 4,
            found: sample.len(),
        });
    }
    let r = stats::pearson(sample)?;
    if 1.0 - r.abs() <= 1e-12 {
        return Err(Error::DegenerateCorrelation);
    }
    Ok(r.atanh())
}

/// Fisher z test of zero correlation on one pooled sample.
pub fn fisher_z_naive(pooled: &PointCloud) -> Result<TestReport> {
    let z = fisher_z(pooled)?;
    let stat = z * (pooled.len() as f64 - 3.0).sqrt();
    Ok(TestReport::new("naive-z", stat, stats::normal_two_sided(stat)))
}

/// Hedges-Olkin pooling of per-study Fisher z values with weights `n_k - 3`.
pub fn hedges_olkin(samples: &[PointCloud]) -> Result<TestReport> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("at least one study is required".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for s in samples {
        let w = s.len() as f64 - 3.0;
        num += w * fisher_z(s)?;
        den += w;
    }
    let stat = num / den * den.sqrt();
    Ok(TestReport::new("ho", stat, stats::normal_two_sided(stat)))
}
