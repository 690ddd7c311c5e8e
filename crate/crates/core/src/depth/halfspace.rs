//! Tukey half-space depth.
//!
//! Exact for `d <= 2`: sorted counts on the line and an angular sweep in the
//! plane (`O(m log m)` per query). For `d >= 3` the depth is approximated by
//! the smallest projected count over a fixed set of random unit directions.

use rand_distr::{Distribution, StandardNormal};

use super::angular::{self, Dir};
use crate::cloud::PointCloud;
use crate::rng;

/// `min(#{x <= z}, #{x >= z})` on a sorted sample.
#[inline]
pub(crate) fn count_1d(sorted: &[f64], z: f64) -> usize {
    let le = sorted.partition_point(|&v| v <= z);
    let ge = sorted.len() - sorted.partition_point(|&v| v < z);
    le.min(ge)
}

/// Smallest number of points in a closed half-plane whose boundary passes
/// through `z`.
pub(crate) fn count_2d<'a, I>(points: I, m: usize, z: [f64; 2], scratch: &mut Vec<Dir>) -> usize
where
    I: IntoIterator<Item = &'a [f64]>,
{
    angular::sorted_directions(points, z, scratch);
    m - angular::max_open_halfplane(scratch, None)
}

/// Whether the planar depth count of `z` is at least `k`, with early exit.
pub(crate) fn count_2d_at_least<'a, I>(points: I, m: usize, z: [f64; 2], k: usize, scratch: &mut Vec<Dir>) -> bool
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if k == 0 {
        return true;
    }
    if k > m {
        return false;
    }
    angular::sorted_directions(points, z, scratch);
    angular::max_open_halfplane(scratch, Some(m - k)) <= m - k
}

/// Projections of a cloud onto a fixed set of directions, each sorted.
#[derive(Debug, Clone)]
pub(crate) struct Projections {
    dim: usize,
    directions: Vec<f64>,
    sorted: Vec<Vec<f64>>,
}

impl Projections {
    pub fn new(cloud: &PointCloud, directions: Vec<f64>) -> Self {
        let dim = cloud.dim();
        let sorted = directions
            .chunks_exact(dim)
            .map(|u| {
                let mut proj: Vec<f64> = cloud.iter().map(|p| dot(u, p)).collect();
                proj.sort_unstable_by(f64::total_cmp);
                proj
            })
            .collect();
        Self {
            dim,
            directions,
            sorted,
        }
    }

    /// Random unit directions from the standard normal, seeded.
    pub fn random(cloud: &PointCloud, count: usize, seed: u64) -> Self {
        let dim = cloud.dim();
        let mut rng = rng::stream(seed, 0x4853);
        let mut dirs = Vec::with_capacity(count * dim);
        while dirs.len() < count * dim {
            let u: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                dirs.extend(u.iter().map(|x| x / norm));
            }
        }
        Self::new(cloud, dirs)
    }

    /// Evenly spaced planar directions over the full circle.
    pub fn planar(cloud: &PointCloud, count: usize) -> Self {
        let mut dirs = Vec::with_capacity(2 * count);
        for j in 0..count {
            let a = std::f64::consts::TAU * j as f64 / count as f64;
            dirs.push(a.cos());
            dirs.push(a.sin());
        }
        Self::new(cloud, dirs)
    }

    /// Minimum projected closed half-line count over all directions.
    pub fn min_count(&self, z: &[f64]) -> usize {
        self.directions
            .chunks_exact(self.dim)
            .zip(&self.sorted)
            .map(|(u, proj)| count_1d(proj, dot(u, z)))
            .min()
            .unwrap_or(0)
    }

    /// Like [`Self::min_count`] but widened by `tol` so the result is an upper
    /// bound on the exact depth count despite rounding in the projections.
    pub fn min_count_upper(&self, z: &[f64], tol: f64) -> usize {
        self.directions
            .chunks_exact(self.dim)
            .zip(&self.sorted)
            .map(|(u, proj)| {
                let t = dot(u, z);
                let le = proj.partition_point(|&v| v <= t + tol);
                let ge = proj.len() - proj.partition_point(|&v| v < t - tol);
                le.min(ge)
            })
            .min()
            .unwrap_or(0)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rounding slack for comparisons of projections of this cloud.
pub(crate) fn projection_tolerance(cloud: &PointCloud) -> f64 {
    let scale = cloud.as_flat().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    1e-12 * (1.0 + scale)
}

/// Centrality of `z` against a planar cloud without caching every depth.
///
/// Returns `#{i : depth(x_i) < k}` where `k` is the comparison threshold in
/// counts. Points are classified by an outer polygon test over fixed
/// directions, certified inside via the convex hull of points already known
/// to reach depth `k` (depth regions are convex), and the remainder by an
/// exact sweep.
pub(crate) fn count_below_2d(cloud: &PointCloud, k: usize) -> usize {
    let m = cloud.len();
    if k <= 1 {
        // Every cloud point lies in each closed half-plane through itself.
        return 0;
    }
    if k > m {
        return m;
    }
    const DIRECTIONS: usize = 64;
    let tol = projection_tolerance(cloud);

    // Outer screen: x_i has depth < k if some direction puts it strictly
    // beyond the k-th largest projection.
    let mut dirs = Vec::with_capacity(DIRECTIONS);
    let mut thresholds = Vec::with_capacity(DIRECTIONS);
    let mut buf: Vec<f64> = Vec::with_capacity(m);
    for j in 0..DIRECTIONS {
        let a = std::f64::consts::TAU * j as f64 / DIRECTIONS as f64;
        let u = [a.cos(), a.sin()];
        buf.clear();
        buf.extend(cloud.iter().map(|p| u[0] * p[0] + u[1] * p[1]));
        let (_, q, _) = buf.select_nth_unstable_by(m - k, f64::total_cmp);
        thresholds.push(*q);
        dirs.push(u);
    }

    let mut candidates: Vec<(f64, usize)> = Vec::new();
    'points: for (i, p) in cloud.iter().enumerate() {
        let mut slack = f64::INFINITY;
        for (u, &q) in dirs.iter().zip(&thresholds) {
            let s = q - (u[0] * p[0] + u[1] * p[1]);
            if s < -tol {
                continue 'points;
            }
            slack = slack.min(s);
        }
        candidates.push((slack, i));
    }
    candidates.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut scratch = Vec::with_capacity(m);
    let mut exact = |i: usize| {
        let p = cloud.point(i);
        count_2d_at_least(cloud.iter(), m, [p[0], p[1]], k, &mut scratch)
    };

    let band = (candidates.len() / 5).max(32).min(candidates.len());
    let mut deep = 0usize;
    let mut certified: Vec<[f64; 2]> = Vec::new();
    for &(_, i) in &candidates[..band] {
        if exact(i) {
            deep += 1;
            let p = cloud.point(i);
            certified.push([p[0], p[1]]);
        }
    }
    let hull = convex_hull(&mut certified);
    for &(_, i) in &candidates[band..] {
        let p = cloud.point(i);
        if strictly_inside(&hull, [p[0], p[1]], tol) || exact(i) {
            deep += 1;
        }
    }
    m - deep
}

/// Andrew's monotone chain; returns the hull counter-clockwise without
/// repeating the first vertex.
fn convex_hull(points: &mut [[f64; 2]]) -> Vec<[f64; 2]> {
    points.sort_unstable_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let n = points.len();
    if n < 3 {
        return Vec::new();
    }
    let turn =
        |o: [f64; 2], a: [f64; 2], b: [f64; 2]| angular::cross(a[0] - o[0], a[1] - o[1], b[0] - o[0], b[1] - o[1]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * n);
    for &p in points.iter() {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in points.iter().rev().skip(1) {
        while hull.len() >= lower && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        hull.clear();
    }
    hull
}

fn strictly_inside(hull: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    if hull.len() < 3 {
        return false;
    }
    let n = hull.len();
    (0..n).all(|e| {
        let a = hull[e];
        let b = hull[(e + 1) % n];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        angular::cross(b[0] - a[0], b[1] - a[1], p[0] - a[0], p[1] - a[1]) > tol * (1.0 + len)
    })
}
