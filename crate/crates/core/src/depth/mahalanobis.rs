use nalgebra::{DMatrix, DVector};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg;

/// Sample mean and inverse covariance of a cloud.
#[derive(Debug, Clone)]
pub(crate) struct Mahalanobis {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
}

impl Mahalanobis {
    pub fn new(cloud: &PointCloud) -> Result<Self> {
        let d = cloud.dim();
        if cloud.len() < d + 2 {
            return Err(Error::TooFewPoints {
                needed: d + 2,
                found: cloud.len(),
            });
        }
        let cov = linalg::matrix_from_flat(d, &cloud.covariance());
        let precision = linalg::inverse_spd(&cov)?;
        Ok(Self {
            mean: DVector::from_vec(cloud.mean()),
            precision,
        })
    }

    pub fn depth(&self, z: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(z) - &self.mean;
        let q = (diff.transpose() * &self.precision * &diff)[(0, 0)];
        1.0 / (1.0 + q.max(0.0))
    }
}
