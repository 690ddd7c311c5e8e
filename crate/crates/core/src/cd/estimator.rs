use std::fmt;
use std::sync::Arc;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::stats;

type EstimateFn = dyn Fn(&PointCloud) -> Result<Vec<f64>> + Send + Sync;

/// A user-supplied estimator. `covariance`, when present, returns the
/// row-major `p x p` covariance of the estimate and enables bootstrap-t.
#[derive(Clone)]
pub struct CustomEstimator {
    name: String,
    output_dim: usize,
    estimate: Arc<EstimateFn>,
    covariance: Option<Arc<EstimateFn>>,
}

impl CustomEstimator {
    pub fn new<F>(name: impl Into<String>, output_dim: usize, estimate: F) -> Self
    where
        F: Fn(&PointCloud) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            output_dim,
            estimate: Arc::new(estimate),
            covariance: None,
        }
    }

    pub fn with_covariance<F>(mut self, covariance: F) -> Self
    where
        F: Fn(&PointCloud) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        self.covariance = Some(Arc::new(covariance));
        self
    }
}

/// Maps a sample to a parameter vector.
#[derive(Clone)]
pub enum Estimator {
    Mean,
    CoordinatewiseMedian,
    /// Pearson correlation of a bivariate sample.
    PearsonCorrelation,
    Custom(CustomEstimator),
}

impl fmt::Debug for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Estimator {
    pub fn name(&self) -> String {
        match self {
            Estimator::Mean => "mean".into(),
            Estimator::CoordinatewiseMedian => "median".into(),
            Estimator::PearsonCorrelation => "pearson".into(),
            Estimator::Custom(c) => c.name.clone(),
        }
    }

    /// Parameter dimension for samples of dimension `input_dim`.
    pub fn output_dim(&self, input_dim: usize) -> Result<usize> {
        match self {
            Estimator::Mean | Estimator::CoordinatewiseMedian => Ok(input_dim),
            Estimator::PearsonCorrelation if input_dim == 2 => Ok(1),
            Estimator::PearsonCorrelation => Err(Error::DimensionMismatch {
                expected: 2,
                found: input_dim,
            }),
            Estimator::Custom(c) if c.output_dim == 0 => Err(Error::InvalidArgument(
                "estimator output dimension must be at least 1".into(),
            )),
            Estimator::Custom(c) => Ok(c.output_dim),
        }
    }

    pub fn estimate(&self, sample: &PointCloud) -> Result<Vec<f64>> {
        match self {
            Estimator::Mean => Ok(sample.mean()),
            Estimator::CoordinatewiseMedian => Ok(stats::coordinatewise_median(sample)),
            Estimator::PearsonCorrelation => Ok(vec![stats::pearson(sample)?]),
            Estimator::Custom(c) => {
                let v = (c.estimate)(sample)?;
                if v.len() != c.output_dim {
                    return Err(Error::DimensionMismatch {
                        expected: c.output_dim,
                        found: v.len(),
                    });
                }
                Ok(v)
            }
        }
    }

    /// Whether [`Self::covariance`] is available.
    pub fn studentizable(&self) -> bool {
        match self {
            Estimator::Mean => true,
            Estimator::Custom(c) => c.covariance.is_some(),
            _ => false,
        }
    }

    /// Covariance of the estimate, row-major. The mean uses `S / n`.
    pub fn covariance(&self, sample: &PointCloud) -> Result<Vec<f64>> {
        match self {
            Estimator::Mean => {
                let n = sample.len() as f64;
                Ok(sample.covariance().into_iter().map(|v| v / n).collect())
            }
            Estimator::Custom(CustomEstimator {
                covariance: Some(cov), ..
            }) => cov(sample),
            other => Err(Error::StudentizationUnavailable(other.name())),
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Self::Mean),
            "median" | "coordinatewise-median" => Ok(Self::CoordinatewiseMedian),
            "pearson" | "correlation" => Ok(Self::PearsonCorrelation),
            other => Err(Error::InvalidArgument(format!("unknown estimator `{other}`"))),
        }
    }
}
