//! Maximization of a combined confidence curve over a box.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::study::CombinedCV;
use crate::cloud::inflate_box;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    /// Box over the common parameter; `None` derives it from the studies.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Grid points per axis when at most two coordinates are searched.
    pub grid_points: usize,
    /// Low-discrepancy points when more than two coordinates are searched.
    pub quasi_points: usize,
    /// Nelder-Mead starts, taken from the best candidates.
    pub starts: usize,
    /// Curve evaluations per Nelder-Mead run.
    pub max_evals: usize,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            bounds: None,
            grid_points: 61,
            quasi_points: 10_000,
            starts: 5,
            max_evals: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MceResult {
    /// Arg-max; `NaN` at unidentified coordinates.
    pub theta: Vec<f64>,
    /// Combined curve value at `theta`.
    pub value: f64,
    /// Coordinates no study informs.
    pub unidentified: Vec<usize>,
    /// Exact curve evaluations spent.
    pub evaluations: usize,
}

/// Search box: explicit bounds are used as given, derived boxes are
/// inflated by 20%.
fn search_box(ccv: &CombinedCV, spec: &SearchSpec, free: &[usize]) -> Result<Vec<(f64, f64)>> {
    let p = ccv.dim();
    let bounds = match &spec.bounds {
        Some(b) => {
            if b.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: b.len(),
                });
            }
            b.clone()
        }
        None => {
            let raw = ccv.draw_box()?;
            let mut filled = Vec::with_capacity(p);
            for (j, b) in raw.into_iter().enumerate() {
                match b {
                    Some((lo, hi)) if lo < hi || !free.contains(&j) => filled.push((lo, hi)),
                    Some(_) => return Err(Error::SearchBoxDegenerate { coordinate: j }),
                    None if !free.contains(&j) => filled.push((0.0, 0.0)),
                    None => {
                        return Err(Error::InvalidArgument(format!(
                            "no default search range for coordinate {j}; pass explicit bounds"
                        )))
                    }
                }
            }
            inflate_box(&filled, 0.2)
        }
    };
    for &j in free {
        let (lo, hi) = bounds[j];
        if lo >= hi || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::SearchBoxDegenerate { coordinate: j });
        }
    }
    Ok(bounds)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Candidate points in unit-cube coordinates over `q` free axes.
fn candidates(q: usize, spec: &SearchSpec) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if q <= 2 {
        let g = spec.grid_points.max(2);
        let ticks: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
        let pts = if q == 1 {
            ticks.iter().map(|&t| vec![t]).collect()
        } else {
            ticks
                .iter()
                .flat_map(|&y| ticks.iter().map(move |&x| vec![x, y]))
                .collect()
        };
        Ok((pts, vec![1.0 / (g - 1) as f64; q]))
    } else {
        if q > PRIMES.len() {
            return Err(Error::InvalidArgument(format!(
                "at most {} coordinates can be searched",
                PRIMES.len()
            )));
        }
        let n = spec.quasi_points.max(1);
        let pts = (1..=n as u64)
            .map(|i| PRIMES[..q].iter().map(|&b| radical_inverse(i, b)).collect())
            .collect();
        Ok((pts, vec![(n as f64).powf(-1.0 / q as f64); q]))
    }
}

struct Objective<'a> {
    ccv: &'a CombinedCV,
    bounds: &'a [(f64, f64)],
    free: &'a [usize],
    base: Vec<f64>,
}

impl Objective<'_> {
    fn theta(&self, unit: &[f64]) -> Vec<f64> {
        let mut t = self.base.clone();
        for (&j, &u) in self.free.iter().zip(unit) {
            let (lo, hi) = self.bounds[j];
            t[j] = lo + u.clamp(0.0, 1.0) * (hi - lo);
        }
        t
    }

    fn exact(&self, unit: &[f64]) -> Result<f64> {
        self.ccv.evaluate(&self.theta(unit))
    }

    fn bound(&self, unit: &[f64]) -> Result<f64> {
        self.ccv.upper_bound(&self.theta(unit))
    }
}

/// Larger value first, then earlier index.
fn better(a: (f64, usize), b: (f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Nelder-Mead maximization in unit coordinates, clamped to the cube.
fn nelder_mead(
    obj: &Objective<'_>,
    start: &[f64],
    f0: f64,
    step: &[f64],
    max_evals: usize,
) -> Result<(Vec<f64>, f64, usize)> {
    let q = start.len();
    let clamp = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect() };
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.to_vec(), f0)];
    let mut evals = 0;
    for j in 0..q {
        let mut v = start.to_vec();
        v[j] = if v[j] + step[j] <= 1.0 {
            v[j] + step[j]
        } else {
            v[j] - step[j]
        };
        let f = obj.exact(&v)?;
        evals += 1;
        simplex.push((v, f));
    }
    let tol = 1e-4 * step.iter().copied().fold(f64::INFINITY, f64::min);
    while evals < max_evals {
        // Stable sort keeps the earlier vertex first among equal values.
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if size < tol {
            break;
        }
        let worst = simplex[q].clone();
        let centroid: Vec<f64> = (0..q)
            .map(|j| simplex[..q].iter().map(|(v, _)| v[j]).sum::<f64>() / q as f64)
            .collect();
        let along = |t: f64| clamp(centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect());
        let reflected = along(1.0);
        let fr = obj.exact(&reflected)?;
        evals += 1;
        if fr > simplex[0].1 {
            let expanded = along(2.0);
            let fe = obj.exact(&expanded)?;
            evals += 1;
            simplex[q] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr > simplex[q - 1].1 {
            simplex[q] = (reflected, fr);
        } else {
            let outside = fr > worst.1;
            let contracted = along(if outside { 0.5 } else { -0.5 });
            let fc = obj.exact(&contracted)?;
            evals += 1;
            let accept = if outside { fc >= fr } else { fc > worst.1 };
            if accept {
                simplex[q] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = vertex.0.iter().zip(&best).map(|(x, b)| b + 0.5 * (x - b)).collect();
                    let f = obj.exact(&v)?;
                    evals += 1;
                    *vertex = (v, f);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (v, f) = simplex.swap_remove(0);
    Ok((v, f, evals))
}

/// Arg-max of the combined curve: a grid (or low-discrepancy) scan pruned
/// by cheap upper bounds, then Nelder-Mead from the best candidates.
pub fn combined_mce(ccv: &CombinedCV, spec: &SearchSpec) -> Result<MceResult> {
    let p = ccv.dim();
    let unidentified = ccv.unidentified();
    let free: Vec<usize> = (0..p).filter(|j| !unidentified.contains(j)).collect();
    if free.is_empty() {
        return Ok(MceResult {
            theta: vec![f64::NAN; p],
            value: f64::NAN,
            unidentified,
            evaluations: 0,
        });
    }
    let bounds = search_box(ccv, spec, &free)?;
    let base: Vec<f64> = bounds
        .iter()
        .map(|&(lo, hi)| {
            if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                0.0
            }
        })
        .collect();
    let obj = Objective {
        ccv,
        bounds: &bounds,
        free: &free,
        base,
    };
    let (points, step) = candidates(free.len(), spec)?;
    let upper: Vec<f64> = points.par_iter().map(|u| obj.bound(u)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| better((upper[a], a), (upper[b], b)));

    let starts = spec.starts.max(1);
    let mut top: Vec<(f64, usize)> = Vec::with_capacity(starts + 1);
    let mut evaluations = 0;
    const BATCH: usize = 32;
    'scan: for chunk in order.chunks(BATCH) {
        if top.len() == starts && upper[chunk[0]] < top[starts - 1].0 {
            break;
        }
        let values: Vec<f64> = chunk
            .par_iter()
            .map(|&i| obj.exact(&points[i]))
            .collect::<Result<_>>()?;
        for (&i, &v) in chunk.iter().zip(&values) {
            if top.len() == starts && upper[i] < top[starts - 1].0 {
                break 'scan;
            }
            evaluations += 1;
            let pos = top.partition_point(|&e| better(e, (v, i)) == Ordering::Less);
            top.insert(pos, (v, i));
            top.truncate(starts);
        }
    }

    let refined: Vec<(Vec<f64>, f64, usize)> = top
        .par_iter()
        .map(|&(v, i)| nelder_mead(&obj, &points[i], v, &step, spec.max_evals))
        .collect::<Result<_>>()?;
    let mut best_unit = points[top[0].1].clone();
    let mut best_value = top[0].0;
    for (u, v, e) in refined {
        evaluations += e;
        if v > best_value {
            best_value = v;
            best_unit = u;
        }
    }
    let mut theta = obj.theta(&best_unit);
    for &j in &unidentified {
        theta[j] = f64::NAN;
    }
    Ok(MceResult {
        theta,
        value: best_value,
        unidentified,
        evaluations,
    })
}
