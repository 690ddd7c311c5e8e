use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::scheme::FusionScheme;
use crate::cd::{ConfidenceCurve, DepthCD};
use crate::cloud::inflate_box;
use crate::error::{Error, Result};
use crate::linalg;

type MapFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
pub struct CustomMap {
    name: String,
    domain_dim: usize,
    output_dim: usize,
    f: Arc<MapFn>,
}

impl CustomMap {
    pub fn new<F>(name: impl Into<String>, domain_dim: usize, output_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            domain_dim,
            output_dim,
            f: Arc::new(f),
        }
    }
}

/// Maps the common parameter to the parameter a study can estimate.
#[derive(Clone)]
pub enum ParamMap {
    Identity,
    CoordinateSelect {
        indices: Vec<usize>,
        domain_dim: usize,
    },
    /// Row-major `rows x cols` matrix of full row rank.
    Linear {
        rows: usize,
        cols: usize,
        matrix: Vec<f64>,
    },
    Custom(CustomMap),
}

impl fmt::Debug for ParamMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamMap::Identity => f.write_str("Identity"),
            ParamMap::CoordinateSelect { indices, domain_dim } => {
                write!(f, "CoordinateSelect({indices:?} of {domain_dim})")
            }
            ParamMap::Linear { rows, cols, matrix } => write!(f, "Linear({rows}x{cols} {matrix:?})"),
            ParamMap::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

/// Serializable form of a [`ParamMap`]; custom maps are recorded by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapSummary {
    Identity,
    Select { indices: Vec<usize>, domain_dim: usize },
    Linear { rows: usize, cols: usize, matrix: Vec<f64> },
    Custom { name: String },
}

impl ParamMap {
    pub fn linear(rows: usize, cols: usize, matrix: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || matrix.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: matrix.len(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("map matrix has non-finite entries".into()));
        }
        if linalg::rank(&DMatrix::from_row_slice(rows, cols, &matrix)) < rows {
            return Err(Error::InvalidArgument("linear map must have full row rank".into()));
        }
        Ok(ParamMap::Linear { rows, cols, matrix })
    }

    pub fn select(indices: Vec<usize>, domain_dim: usize) -> Result<Self> {
        if indices.is_empty() || indices.iter().any(|&i| i >= domain_dim) {
            return Err(Error::InvalidArgument(format!(
                "coordinate selection {indices:?} is invalid for dimension {domain_dim}"
            )));
        }
        Ok(ParamMap::CoordinateSelect { indices, domain_dim })
    }

    pub fn summary(&self) -> MapSummary {
        match self {
            ParamMap::Identity => MapSummary::Identity,
            ParamMap::CoordinateSelect { indices, domain_dim } => MapSummary::Select {
                indices: indices.clone(),
                domain_dim: *domain_dim,
            },
            ParamMap::Linear { rows, cols, matrix } => MapSummary::Linear {
                rows: *rows,
                cols: *cols,
                matrix: matrix.clone(),
            },
            ParamMap::Custom(c) => MapSummary::Custom { name: c.name.clone() },
        }
    }

    /// Domain dimension, or `None` for the identity.
    pub fn domain_dim(&self) -> Option<usize> {
        match self {
            ParamMap::Identity => None,
            ParamMap::CoordinateSelect { domain_dim, .. } => Some(*domain_dim),
            ParamMap::Linear { cols, .. } => Some(*cols),
            ParamMap::Custom(c) => Some(c.domain_dim),
        }
    }

    pub fn output_dim(&self) -> Option<usize> {
        match self {
            ParamMap::Identity => None,
            ParamMap::CoordinateSelect { indices, .. } => Some(indices.len()),
            ParamMap::Linear { rows, .. } => Some(*rows),
            ParamMap::Custom(c) => Some(c.output_dim),
        }
    }

    pub fn apply(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            ParamMap::Identity => theta.to_vec(),
            ParamMap::CoordinateSelect { indices, .. } => indices.iter().map(|&i| theta[i]).collect(),
            ParamMap::Linear { cols, matrix, .. } => matrix
                .chunks_exact(*cols)
                .map(|row| row.iter().zip(theta).map(|(a, t)| a * t).sum())
                .collect(),
            ParamMap::Custom(c) => (c.f)(theta),
        }
    }

    /// Whether the output depends on domain coordinate `j`. Custom maps are
    /// assumed to depend on every coordinate.
    pub fn uses(&self, j: usize) -> bool {
        match self {
            ParamMap::Identity | ParamMap::Custom(_) => true,
            ParamMap::CoordinateSelect { indices, .. } => indices.contains(&j),
            ParamMap::Linear { cols, matrix, .. } => matrix.chunks_exact(*cols).any(|row| row[j] != 0.0),
        }
    }
}

/// One source of evidence: a depth-CD over the parameter the study can
/// estimate and the map from the common parameter to it.
#[derive(Debug, Clone)]
pub struct Study {
    pub cd: DepthCD,
    pub map: ParamMap,
    pub n: usize,
}

impl Study {
    pub fn new(cd: DepthCD, map: ParamMap, n: usize) -> Result<Self> {
        if let Some(out) = map.output_dim() {
            if out != cd.dim() {
                return Err(Error::DimensionMismatch {
                    expected: cd.dim(),
                    found: out,
                });
            }
        }
        if let Some(domain) = map.domain_dim() {
            if cd.dim() > domain {
                return Err(Error::InvalidArgument(format!(
                    "study parameter dimension {} exceeds the common dimension {domain}",
                    cd.dim()
                )));
            }
        }
        Ok(Self { cd, map, n })
    }

    pub fn identity(cd: DepthCD, n: usize) -> Self {
        Self {
            cd,
            map: ParamMap::Identity,
            n,
        }
    }

    fn domain_dim(&self) -> usize {
        self.map.domain_dim().unwrap_or(self.cd.dim())
    }

    /// Floor applied to centralities before combination: `1 / (B + 1)`.
    pub fn floor(&self) -> f64 {
        1.0 / (self.cd.len() as f64 + 1.0)
    }

    pub fn centrality(&self, theta: &[f64]) -> Result<f64> {
        self.cd.pvalue(&self.map.apply(theta))
    }

    fn centrality_upper_bound(&self, theta: &[f64]) -> Result<f64> {
        self.cd.ranked().centrality_upper_bound(&self.map.apply(theta))
    }

    /// Bounding box of the draws pulled back into the common space, per
    /// coordinate; `None` where this study says nothing.
    fn pulled_back_box(&self, p: usize) -> Result<Vec<Option<(f64, f64)>>> {
        let mut out = vec![None; p];
        let mut widen = |j: usize, v: f64| {
            let b: &mut Option<(f64, f64)> = &mut out[j];
            *b = Some(b.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v))));
        };
        match &self.map {
            ParamMap::Identity => {
                for (j, (lo, hi)) in self.cd.draws().bounding_box().into_iter().enumerate() {
                    widen(j, lo);
                    widen(j, hi);
                }
            }
            ParamMap::CoordinateSelect { indices, .. } => {
                for (r, (lo, hi)) in self.cd.draws().bounding_box().into_iter().enumerate() {
                    widen(indices[r], lo);
                    widen(indices[r], hi);
                }
            }
            ParamMap::Linear { rows, cols, matrix } => {
                let pinv = linalg::pseudo_inverse(&DMatrix::from_row_slice(*rows, *cols, matrix))?;
                for d in self.cd.draws().iter() {
                    for j in 0..*cols {
                        widen(j, (0..*rows).map(|r| pinv[(j, r)] * d[r]).sum());
                    }
                }
            }
            ParamMap::Custom(_) => {}
        }
        Ok(out)
    }
}

/// The combined confidence curve of several studies under one scheme.
#[derive(Debug, Clone)]
pub struct CombinedCV {
    studies: Vec<Study>,
    scheme: FusionScheme,
    dim: usize,
}

impl CombinedCV {
    pub fn new(studies: Vec<Study>, scheme: FusionScheme) -> Result<Self> {
        let first = studies
            .first()
            .ok_or_else(|| Error::InvalidArgument("at least one study is required".into()))?;
        let dim = first.domain_dim();
        for s in &studies[1..] {
            if s.domain_dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.domain_dim(),
                });
            }
        }
        scheme.check_arity(studies.len())?;
        Ok(Self { studies, scheme, dim })
    }

    pub fn studies(&self) -> &[Study] {
        &self.studies
    }

    pub fn scheme(&self) -> &FusionScheme {
        &self.scheme
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: theta.len(),
            });
        }
        Ok(())
    }

    /// Unclamped per-study centralities at `theta`.
    pub fn centralities(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check(theta)?;
        self.studies.iter().map(|s| s.centrality(theta)).collect()
    }

    fn combine_clamped(&self, u: Vec<f64>) -> Result<f64> {
        let clamped: Vec<f64> = u
            .into_iter()
            .zip(&self.studies)
            .map(|(c, s)| c.max(s.floor()))
            .collect();
        self.scheme.combine(&clamped)
    }

    pub fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        let u = self.centralities(theta)?;
        self.combine_clamped(u)
    }

    /// A cheap value never below [`Self::evaluate`].
    pub fn upper_bound(&self, theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        let u = self
            .studies
            .iter()
            .map(|s| s.centrality_upper_bound(theta))
            .collect::<Result<Vec<_>>>()?;
        self.combine_clamped(u)
    }

    pub fn pvalue(&self, hypothesized: &[f64]) -> Result<f64> {
        self.evaluate(hypothesized)
    }

    /// Coordinates of the common parameter that no study's map depends on.
    pub fn unidentified(&self) -> Vec<usize> {
        (0..self.dim)
            .filter(|&j| !self.studies.iter().any(|s| s.map.uses(j)))
            .collect()
    }

    /// Union of the studies' pulled-back draw boxes, before inflation.
    /// Coordinates no study bounds are `None`.
    pub fn draw_box(&self) -> Result<Vec<Option<(f64, f64)>>> {
        let mut out: Vec<Option<(f64, f64)>> = vec![None; self.dim];
        for s in &self.studies {
            for (o, b) in out.iter_mut().zip(s.pulled_back_box(self.dim)?) {
                if let Some((lo, hi)) = b {
                    *o = Some(o.map_or((lo, hi), |(a, c)| (a.min(lo), c.max(hi))));
                }
            }
        }
        Ok(out)
    }
}

impl ConfidenceCurve for CombinedCV {
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, theta: &[f64]) -> Result<f64> {
        CombinedCV::evaluate(self, theta)
    }

    fn default_bounds(&self) -> Vec<(f64, f64)> {
        let raw: Vec<(f64, f64)> = self
            .draw_box()
            .unwrap_or_else(|_| vec![None; self.dim])
            .into_iter()
            .map(|b| b.unwrap_or((-1.0, 1.0)))
            .collect();
        inflate_box(&raw, 0.2)
    }
}

pub fn combined_cv(studies: Vec<Study>, scheme: FusionScheme) -> Result<CombinedCV> {
    CombinedCV::new(studies, scheme)
}

pub fn combined_pvalue(ccv: &CombinedCV, hypothesized: &[f64]) -> Result<f64> {
    ccv.pvalue(hypothesized)
}
