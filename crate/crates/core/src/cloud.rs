//! Point clouds in R^d stored as a flat row-major buffer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered, non-empty list of `d`-dimensional points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    /// Builds a cloud from a flat row-major buffer of `len * dim` values.
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("point dimension must be at least 1".into()));
        }
        if data.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, found: 0 });
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate in point {}", pos / dim)));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::TooFewPoints { needed: 1, found: 0 })?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(dim, data)
    }

    /// One-dimensional cloud from scalar values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false; clouds hold at least one point.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn check_query(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: z.len(),
            });
        }
        Ok(())
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for p in self.iter() {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        let n = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Unbiased sample covariance (divisor `n - 1`), row-major `dim x dim`.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dim;
        let mean = self.mean();
        let mut cov = vec![0.0; d * d];
        for p in self.iter() {
            for a in 0..d {
                let da = p[a] - mean[a];
                for b in a..d {
                    cov[a * d + b] += da * (p[b] - mean[b]);
                }
            }
        }
        let denom = (self.len().max(2) - 1) as f64;
        for a in 0..d {
            for b in a..d {
                let v = cov[a * d + b] / denom;
                cov[a * d + b] = v;
                cov[b * d + a] = v;
            }
        }
        cov
    }

    /// Per-coordinate `(min, max)`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.iter() {
            for (b, &v) in bounds.iter_mut().zip(p) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        bounds
    }

    /// Applies `x -> A x + b` to every point; `a` is row-major `dim x dim`.
    pub fn affine_map(&self, a: &[f64], b: &[f64]) -> Self {
        let d = self.dim;
        let mut data = Vec::with_capacity(self.data.len());
        for p in self.iter() {
            data.extend(affine_apply(a, b, p));
        }
        Self { dim: d, data }
    }

    /// Selects rows by index (with repetition), as in a bootstrap resample.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        Self { dim: self.dim, data }
    }

    /// Keeps only the listed coordinates.
    pub fn project(&self, coords: &[usize]) -> Result<Self> {
        if let Some(&bad) = coords.iter().find(|&&c| c >= self.dim) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {bad} out of range for dimension {}",
                self.dim
            )));
        }
        let mut data = Vec::with_capacity(self.len() * coords.len());
        for p in self.iter() {
            data.extend(coords.iter().map(|&c| p[c]));
        }
        Self::from_flat(coords.len(), data)
    }
}

pub(crate) fn affine_apply(a: &[f64], b: &[f64], p: &[f64]) -> Vec<f64> {
    let d = p.len();
    (0..d)
        .map(|r| {
            let row = &a[r * d..(r + 1) * d];
            row.iter().zip(p).map(|(x, y)| x * y).sum::<f64>() + b[r]
        })
        .collect()
}

/// Widens each side of a box by `fraction / 2` of its width. Zero-width
/// sides fall back to a unit-scale pad so the box keeps positive volume.
pub fn inflate_box(bounds: &[(f64, f64)], fraction: f64) -> Vec<(f64, f64)> {
    bounds
        .iter()
        .map(|&(lo, hi)| {
            let width = hi - lo;
            let pad = if width > 0.0 {
                0.5 * fraction * width
            } else {
                0.5 * fraction * lo.abs().max(1.0)
            };
            (lo - pad, hi + pad)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_empty_input() {
        assert!(PointCloud::from_rows::<Vec<f64>>(&[]).is_err());
        assert!(matches!(
            PointCloud::from_rows(&[vec![1.0, 2.0], vec![1.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(PointCloud::from_flat(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PointCloud::from_flat(1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn moments() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]]).unwrap();
        assert_eq!(c.mean(), vec![1.0, 1.0]);
        let cov = c.covariance();
        assert!((cov[0] - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(cov[1], 0.0);
        assert_eq!(c.bounding_box(), vec![(0.0, 2.0), (0.0, 2.0)]);
    }

    #[test]
    fn inflation_pads_degenerate_sides() {
        let b = inflate_box(&[(0.0, 10.0), (3.0, 3.0)], 0.2);
        assert_eq!(b[0], (-1.0, 11.0));
        assert!(b[1].1 > b[1].0);
    }
}
