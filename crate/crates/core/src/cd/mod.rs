//! Depth confidence distributions: construction from bootstrap or pivots,
//! and the p-values, regions and point estimates read off them.

mod estimator;
mod io;
mod region;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{inflate_box, PointCloud};
use crate::depth::{DepthPolicy, RankedCloud};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

pub use estimator::{CustomEstimator, Estimator};
pub use io::{CdSidecar, CD_FORMAT_VERSION};
pub use region::{confidence_region, ConfidenceCurve, ConfidenceRegion, GridSpec, RegionGrid, DEFAULT_GRID_RESOLUTION};

pub const DEFAULT_REPLICATES: usize = 2000;
pub const MIN_REPLICATES: usize = 200;
const MAX_STUDENTIZATION_RETRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CdKind {
    Bootstrap,
    BootstrapT,
    Pivot,
    /// Draws supplied directly by the caller.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub estimator: String,
    pub kind: CdKind,
    pub replicates: usize,
    pub seed: Option<u64>,
}

/// A depth-CD: draws in parameter space ranked by a depth.
#[derive(Debug, Clone)]
pub struct DepthCD {
    draws: PointCloud,
    policy: DepthPolicy,
    ranked: RankedCloud,
    provenance: Provenance,
}

impl DepthCD {
    /// Ranks a draw cloud under `policy`.
    pub fn from_draws(draws: PointCloud, policy: &DepthPolicy, provenance: Provenance) -> Result<Self> {
        let ranked = RankedCloud::new(&draws, policy)?;
        Ok(Self {
            draws,
            policy: policy.clone(),
            ranked,
            provenance,
        })
    }

    pub(crate) fn from_cached(
        draws: PointCloud,
        policy: &DepthPolicy,
        provenance: Provenance,
        depths: Vec<f64>,
    ) -> Result<Self> {
        let ranked = RankedCloud::from_cached(&draws, policy, depths)?;
        Ok(Self {
            draws,
            policy: policy.clone(),
            ranked,
            provenance,
        })
    }

    pub fn draws(&self) -> &PointCloud {
        &self.draws
    }

    pub fn policy(&self) -> &DepthPolicy {
        &self.policy
    }

    /// Depth of each draw against the draw cloud.
    pub fn depths(&self) -> &[f64] {
        self.ranked.depths()
    }

    pub fn ranked(&self) -> &RankedCloud {
        &self.ranked
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.draws.dim()
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Limiting p-value for `theta = hypothesized`: its centrality.
    pub fn pvalue(&self, hypothesized: &[f64]) -> Result<f64> {
        self.ranked.centrality(hypothesized)
    }

    /// Deepest draw; ties go to the lexicographically smallest draw.
    pub fn mce(&self) -> Vec<f64> {
        let depths = self.depths();
        let top = depths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut best: Option<&[f64]> = None;
        for (p, &d) in self.draws.iter().zip(depths) {
            if d == top && best.map_or(true, |b| lex_less(p, b)) {
                best = Some(p);
            }
        }
        best.map(<[f64]>::to_vec).unwrap_or_default()
    }

    /// Recomputes every cached depth and reports the first disagreement.
    pub fn verify_depths(&self) -> Result<()> {
        let fresh = RankedCloud::new(&self.draws, &self.policy)?;
        match fresh.depths().iter().zip(self.depths()).position(|(a, b)| a != b) {
            None => Ok(()),
            Some(i) => Err(Error::Format(format!(
                "cached depth of draw {i} is {} but recomputes to {}",
                self.depths()[i],
                fresh.depths()[i]
            ))),
        }
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

pub fn cd_pvalue(cd: &DepthCD, hypothesized: &[f64]) -> Result<f64> {
    cd.pvalue(hypothesized)
}

pub fn mce(cd: &DepthCD) -> Vec<f64> {
    cd.mce()
}

impl ConfidenceCurve for DepthCD {
    fn dim(&self) -> usize {
        self.draws.dim()
    }

    fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        self.pvalue(theta)
    }

    fn default_bounds(&self) -> Vec<(f64, f64)> {
        inflate_box(&self.draws.bounding_box(), 0.2)
    }
}

fn check_bootstrap_inputs(sample: &PointCloud, p: usize, replicates: usize) -> Result<()> {
    let needed = 10.max(p + 2);
    if sample.len() < needed {
        return Err(Error::TooFewPoints {
            needed,
            found: sample.len(),
        });
    }
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_REPLICATES} bootstrap replicates are required, got {replicates}"
        )));
    }
    static WARNED: std::sync::Once = std::sync::Once::new();
    if replicates < 1000 {
        WARNED.call_once(|| log::warn!("only {replicates} bootstrap replicates; at least 1000 are recommended"));
    }
    Ok(())
}

fn check_spread(draws: &PointCloud) -> Result<()> {
    match draws.bounding_box().iter().position(|&(lo, hi)| lo == hi) {
        Some(coordinate) => Err(Error::DegenerateDraws { coordinate }),
        None => Ok(()),
    }
}

/// Indices of a with-replacement resample of size `n`.
pub fn resample_indices<R: Rng>(rng: &mut R, n: usize, out: &mut Vec<usize>) {
    out.clear();
    out.extend((0..n).map(|_| rng.random_range(0..n)));
}

/// Plain bootstrap draws: the estimator on each resample. Resample `i`
/// comes from stream `(seed, i)`.
pub fn bootstrap_draws(sample: &PointCloud, est: &Estimator, replicates: usize, seed: u64) -> Result<PointCloud> {
    let p = est.output_dim(sample.dim())?;
    check_bootstrap_inputs(sample, p, replicates)?;
    let n = sample.len();
    let rows: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map_init(Vec::new, |idx, i| {
            let mut rng = rng::stream(seed, i as u64);
            resample_indices(&mut rng, n, idx);
            est.estimate(&sample.select(idx))
        })
        .collect::<Result<_>>()?;
    let draws = PointCloud::from_flat(p, rows.concat())?;
    check_spread(&draws)?;
    Ok(draws)
}

pub fn bootstrap_cd(
    sample: &PointCloud,
    est: &Estimator,
    replicates: usize,
    policy: &DepthPolicy,
    seed: u64,
) -> Result<DepthCD> {
    let draws = bootstrap_draws(sample, est, replicates, seed)?;
    DepthCD::from_draws(
        draws,
        policy,
        Provenance {
            estimator: est.name(),
            kind: CdKind::Bootstrap,
            replicates,
            seed: Some(seed),
        },
    )
}

/// How bootstrap-t replicates are rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Studentization {
    /// Symmetric matrix square roots of the full covariances.
    #[default]
    Full,
    /// Per-coordinate standard errors only.
    Componentwise,
}

/// Which side of the estimate the studentized deviations are placed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TOrientation {
    /// `theta_hat + S^{1/2} (S*)^{-1/2} (theta* - theta_hat)`.
    Direct,
    /// `theta_hat - S^{1/2} (S*)^{-1/2} (theta* - theta_hat)`, the inversion
    /// of the studentized pivot. Only this side corrects skewness.
    #[default]
    Reflected,
}

impl std::str::FromStr for TOrientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(Self::Direct),
            "reflected" => Ok(Self::Reflected),
            other => Err(Error::InvalidArgument(format!(
                "unknown bootstrap-t orientation `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BootstrapTOptions {
    pub studentization: Studentization,
    pub orientation: TOrientation,
}

enum Scaler {
    Full(DMatrix<f64>),
    Componentwise(Vec<f64>),
}

impl Scaler {
    fn reference(cov: &[f64], p: usize, kind: Studentization) -> Result<Self> {
        Ok(match kind {
            Studentization::Full => Scaler::Full(linalg::sqrt_spd(&linalg::matrix_from_flat(p, cov))?),
            Studentization::Componentwise => Scaler::Componentwise(component_sd(cov, p)?),
        })
    }

    fn replicate(cov: &[f64], p: usize, kind: Studentization) -> Result<Self> {
        Ok(match kind {
            Studentization::Full => Scaler::Full(linalg::inv_sqrt_spd(&linalg::matrix_from_flat(p, cov))?),
            Studentization::Componentwise => {
                Scaler::Componentwise(component_sd(cov, p)?.into_iter().map(|s| 1.0 / s).collect())
            }
        })
    }
}

fn component_sd(cov: &[f64], p: usize) -> Result<Vec<f64>> {
    (0..p)
        .map(|j| {
            let v = cov[j * p + j];
            let scale = cov.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if v > linalg::RCOND_THRESHOLD * scale && v > 0.0 {
                Ok(v.sqrt())
            } else {
                Err(Error::SingularCovariance { rcond: 0.0 })
            }
        })
        .collect()
}

/// Studentized draw from one replicate.
fn studentize(
    theta: &[f64],
    theta_star: &[f64],
    reference: &Scaler,
    replicate: &Scaler,
    orientation: TOrientation,
) -> Vec<f64> {
    let sign = match orientation {
        TOrientation::Direct => 1.0,
        TOrientation::Reflected => -1.0,
    };
    let dev: Vec<f64> = theta_star.iter().zip(theta).map(|(a, b)| a - b).collect();
    let scaled: Vec<f64> = match (reference, replicate) {
        (Scaler::Full(r), Scaler::Full(s)) => (r * (s * DVector::from_column_slice(&dev))).as_slice().to_vec(),
        (Scaler::Componentwise(r), Scaler::Componentwise(s)) => {
            dev.iter().zip(r).zip(s).map(|((d, r), s)| r * s * d).collect()
        }
        _ => unreachable!("scalers share one studentization kind"),
    };
    theta.iter().zip(&scaled).map(|(t, v)| t + sign * v).collect()
}

/// Bootstrap-t draws. A replicate whose covariance is singular is redrawn
/// from the same stream, up to ten times.
pub fn bootstrap_t_draws(
    sample: &PointCloud,
    est: &Estimator,
    replicates: usize,
    seed: u64,
    options: BootstrapTOptions,
) -> Result<PointCloud> {
    let p = est.output_dim(sample.dim())?;
    check_bootstrap_inputs(sample, p, replicates)?;
    if !est.studentizable() {
        return Err(Error::StudentizationUnavailable(est.name()));
    }
    let theta = est.estimate(sample)?;
    let cov = est.covariance(sample)?;
    let reference = Scaler::reference(&cov, p, options.studentization)?;
    let n = sample.len();
    let rows: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map_init(Vec::new, |idx, i| {
            let mut rng = rng::stream(seed, i as u64);
            let mut last = Error::SingularCovariance { rcond: 0.0 };
            for _ in 0..=MAX_STUDENTIZATION_RETRIES {
                resample_indices(&mut rng, n, idx);
                let resample = sample.select(idx);
                let theta_star = est.estimate(&resample)?;
                let cov_star = est.covariance(&resample)?;
                if cov_star == cov && options.orientation == TOrientation::Direct {
                    return Ok(theta_star);
                }
                match Scaler::replicate(&cov_star, p, options.studentization) {
                    Ok(s) => return Ok(studentize(&theta, &theta_star, &reference, &s, options.orientation)),
                    Err(e) => last = e,
                }
            }
            Err(last)
        })
        .collect::<Result<_>>()?;
    let draws = PointCloud::from_flat(p, rows.concat())?;
    check_spread(&draws)?;
    Ok(draws)
}

pub fn bootstrap_t_cd(
    sample: &PointCloud,
    est: &Estimator,
    replicates: usize,
    policy: &DepthPolicy,
    seed: u64,
    options: BootstrapTOptions,
) -> Result<DepthCD> {
    let draws = bootstrap_t_draws(sample, est, replicates, seed, options)?;
    DepthCD::from_draws(
        draws,
        policy,
        Provenance {
            estimator: est.name(),
            kind: CdKind::BootstrapT,
            replicates,
            seed: Some(seed),
        },
    )
}

/// Inputs of a pivot-based CD: `theta = center - scale^{-1} eta` with `eta`
/// drawn from a parameter-free law.
#[derive(Debug, Clone)]
pub struct PivotSpec {
    pub center: Vec<f64>,
    /// Row-major `p x p`, invertible.
    pub scale: Vec<f64>,
    pub pivot_draws: PointCloud,
}

impl PivotSpec {
    /// The Gaussian-mean pivot with known covariance: center `ybar`, scale
    /// `sqrt(n) sigma^{-1/2}` and `m` standard normal pivot draws from
    /// stream `(seed, 0)`.
    pub fn gaussian_mean(ybar: &[f64], sigma: &[f64], n: usize, m: usize, seed: u64) -> Result<Self> {
        let p = ybar.len();
        let inv_sqrt = linalg::inv_sqrt_spd(&linalg::matrix_from_flat(p, sigma))? * (n as f64).sqrt();
        let mut rng = rng::stream(seed, 0);
        let eta: Vec<f64> = (0..m * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        Ok(Self {
            center: ybar.to_vec(),
            scale: linalg::matrix_to_flat(&inv_sqrt),
            pivot_draws: PointCloud::from_flat(p, eta)?,
        })
    }

    /// Pivot draws mapped into parameter space.
    pub fn draws(&self) -> Result<PointCloud> {
        let p = self.center.len();
        self.pivot_draws.check_query(&self.center)?;
        if self.scale.len() != p * p {
            return Err(Error::DimensionMismatch {
                expected: p * p,
                found: self.scale.len(),
            });
        }
        let inv = linalg::inverse_general(&DMatrix::from_row_slice(p, p, &self.scale))?;
        let neg: Vec<f64> = linalg::matrix_to_flat(&(-inv));
        Ok(self.pivot_draws.affine_map(&neg, &self.center))
    }
}

pub fn pivot_cd(spec: &PivotSpec, policy: &DepthPolicy) -> Result<DepthCD> {
    let draws = spec.draws()?;
    if !policy.is_affine_invariant(draws.dim()) {
        log::warn!(
            "{} depth is not affine invariant in dimension {}; the pivot CD may be invalid",
            policy.kind.name(),
            draws.dim()
        );
    }
    let replicates = draws.len();
    DepthCD::from_draws(
        draws,
        policy,
        Provenance {
            estimator: "pivot".into(),
            kind: CdKind::Pivot,
            replicates,
            seed: None,
        },
    )
}
