//! Central regions `{theta : C(theta) >= alpha}` of a confidence curve.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything that assigns a confidence value in `[0, 1]` to each parameter.
pub trait ConfidenceCurve: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, theta: &[f64]) -> Result<f64>;
    /// Box used for grids and searches when the caller gives none.
    fn default_bounds(&self) -> Vec<(f64, f64)>;
}

pub const DEFAULT_GRID_RESOLUTION: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Per-coordinate `(lo, hi)`; `None` uses the curve's default box.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Points per axis.
    pub resolution: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            bounds: None,
            resolution: DEFAULT_GRID_RESOLUTION,
        }
    }
}

/// Curve values on a rectangular grid together with the induced region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub axes: Vec<Vec<f64>>,
    /// Row-major over `(y, x)` in two dimensions.
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
    /// Region boundary polylines (two dimensions).
    pub boundary: Vec<Vec<[f64; 2]>>,
    /// Maximal intervals inside the region (one dimension).
    pub intervals: Vec<(f64, f64)>,
}

pub struct ConfidenceRegion<'c> {
    curve: &'c dyn ConfidenceCurve,
    alpha: f64,
    grid: Option<RegionGrid>,
}

impl std::fmt::Debug for ConfidenceRegion<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConfidenceRegion")
            .field("alpha", &self.alpha)
            .field("grid", &self.grid.is_some())
            .finish()
    }
}

impl<'c> ConfidenceRegion<'c> {
    /// Membership predicate only; never fails.
    pub fn predicate(curve: &'c dyn ConfidenceCurve, level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Domain(format!("confidence level {level} is not in (0, 1)")));
        }
        Ok(Self {
            curve,
            alpha: 1.0 - level,
            grid: None,
        })
    }

    pub fn level(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn contains(&self, theta: &[f64]) -> Result<bool> {
        Ok(self.curve.evaluate(theta)? >= self.alpha)
    }

    pub fn grid(&self) -> Option<&RegionGrid> {
        self.grid.as_ref()
    }
}

/// The `level` central region of `curve`, optionally evaluated on a grid.
pub fn confidence_region<'c>(
    curve: &'c dyn ConfidenceCurve,
    level: f64,
    grid: Option<&GridSpec>,
) -> Result<ConfidenceRegion<'c>> {
    let mut region = ConfidenceRegion::predicate(curve, level)?;
    if let Some(spec) = grid {
        region.grid = Some(evaluate_grid(curve, region.alpha, spec)?);
    }
    Ok(region)
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn evaluate_grid(curve: &dyn ConfidenceCurve, alpha: f64, spec: &GridSpec) -> Result<RegionGrid> {
    let p = curve.dim();
    if p > 2 {
        return Err(Error::GridUnsupported { dim: p });
    }
    if spec.resolution < 2 {
        return Err(Error::InvalidArgument("grid resolution must be at least 2".into()));
    }
    let bounds = spec.bounds.clone().unwrap_or_else(|| curve.default_bounds());
    if bounds.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: bounds.len(),
        });
    }
    let n = spec.resolution;
    let axes: Vec<Vec<f64>> = bounds.iter().map(|&(lo, hi)| axis(lo, hi, n)).collect();
    let points: Vec<Vec<f64>> = if p == 1 {
        axes[0].iter().map(|&x| vec![x]).collect()
    } else {
        axes[1]
            .iter()
            .flat_map(|&y| axes[0].iter().map(move |&x| vec![x, y]))
            .collect()
    };
    let values: Vec<f64> = points.par_iter().map(|t| curve.evaluate(t)).collect::<Result<_>>()?;
    let inside: Vec<bool> = values.iter().map(|&v| v >= alpha).collect();
    let (boundary, intervals) = if p == 1 {
        (Vec::new(), intervals_1d(curve, alpha, &axes[0], &inside)?)
    } else {
        (marching_squares(&axes[0], &axes[1], &values, alpha), Vec::new())
    };
    Ok(RegionGrid {
        axes,
        values,
        inside,
        boundary,
        intervals,
    })
}

/// Locates the in/out switch between `a` (inside) and `b` (outside).
fn bisect(curve: &dyn ConfidenceCurve, alpha: f64, mut a: f64, mut b: f64) -> Result<f64> {
    for _ in 0..40 {
        let mid = 0.5 * (a + b);
        if curve.evaluate(&[mid])? >= alpha {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a)
}

fn intervals_1d(curve: &dyn ConfidenceCurve, alpha: f64, xs: &[f64], inside: &[bool]) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        if !inside[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < xs.len() && inside[i + 1] {
            i += 1;
        }
        let lo = if start == 0 {
            xs[0]
        } else {
            bisect(curve, alpha, xs[start], xs[start - 1])?
        };
        let hi = if i + 1 == xs.len() {
            xs[i]
        } else {
            bisect(curve, alpha, xs[i], xs[i + 1])?
        };
        out.push((lo, hi));
        i += 1;
    }
    Ok(out)
}

/// Edge of the grid lattice: `(vertical, i, j)` where a horizontal edge
/// joins `(i, j)`-`(i+1, j)` and a vertical one `(i, j)`-`(i, j+1)`.
type EdgeKey = (bool, usize, usize);

/// Boundary polylines of `{v >= alpha}` on a grid, by marching squares with
/// linear interpolation along cell edges.
fn marching_squares(xs: &[f64], ys: &[f64], values: &[f64], alpha: f64) -> Vec<Vec<[f64; 2]>> {
    let nx = xs.len();
    let v = |i: usize, j: usize| values[j * nx + i] - alpha;
    let inside = |i: usize, j: usize| v(i, j) >= 0.0;
    let point = |e: EdgeKey| -> [f64; 2] {
        let (vertical, i, j) = e;
        let (i1, j1) = if vertical { (i, j + 1) } else { (i + 1, j) };
        let (a, b) = (v(i, j), v(i1, j1));
        let t = if a == b { 0.5 } else { (a / (a - b)).clamp(0.0, 1.0) };
        [xs[i] + t * (xs[i1] - xs[i]), ys[j] + t * (ys[j1] - ys[j])]
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..ys.len() - 1 {
        for i in 0..nx - 1 {
            let bottom = (false, i, j);
            let right = (true, i + 1, j);
            let top = (false, i, j + 1);
            let left = (true, i, j);
            let case = (inside(i, j) as u8)
                | (inside(i + 1, j) as u8) << 1
                | (inside(i + 1, j + 1) as u8) << 2
                | (inside(i, j + 1) as u8) << 3;
            let center = 0.25 * (v(i, j) + v(i + 1, j) + v(i + 1, j + 1) + v(i, j + 1)) >= 0.0;
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if center {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if center {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut by_edge: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(s);
        by_edge.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let next_from = |edge: EdgeKey, used: &[bool]| by_edge[&edge].iter().copied().find(|&s| !used[s]);
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut chain = std::collections::VecDeque::from([a, b]);
        for forward in [true, false] {
            loop {
                let end = if forward {
                    *chain.back().unwrap()
                } else {
                    *chain.front().unwrap()
                };
                let Some(s) = next_from(end, &used) else { break };
                used[s] = true;
                let (p, q) = segments[s];
                let other = if p == end { q } else { p };
                if forward {
                    chain.push_back(other);
                } else {
                    chain.push_front(other);
                }
            }
        }
        lines.push(chain.into_iter().map(point).collect());
    }
    lines
}
