//! Brute-force depth oracles on integer points, independent of the library.
#![allow(dead_code)]

use depthcd::rng::stream;
use depthcd::PointCloud;
use rand::Rng;

pub type P = [i64; 2];

pub fn orient(a: P, b: P, c: P) -> i64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Tukey depth count: minimum over closed half-planes through `z`. The
/// minimum sits on an open arc next to a direction perpendicular to some
/// `x - z`, so each such direction is nudged both ways symbolically.
pub fn halfspace_oracle(pts: &[P], z: P) -> usize {
    let at_z = pts.iter().filter(|p| **p == z).count();
    let mut best = pts.len();
    let mut any = false;
    for q in pts.iter().filter(|p| **p != z) {
        let v = [q[0] - z[0], q[1] - z[1]];
        for n in [[-v[1], v[0]], [v[1], -v[0]]] {
            for eps in [1i64, -1] {
                any = true;
                let count = pts
                    .iter()
                    .filter(|p| {
                        let w = [p[0] - z[0], p[1] - z[1]];
                        if w == [0, 0] {
                            return true;
                        }
                        let dot = n[0] * w[0] + n[1] * w[1];
                        // Rotating n by +eps moves it toward perp(n) = (-n1, n0).
                        let tilt = -n[1] * w[0] + n[0] * w[1];
                        dot > 0 || (dot == 0 && eps * tilt > 0)
                    })
                    .count();
                best = best.min(count);
            }
        }
    }
    if any {
        best
    } else {
        at_z
    }
}

pub fn on_segment(a: P, b: P, z: P) -> bool {
    orient(a, b, z) == 0
        && z[0] >= a[0].min(b[0])
        && z[0] <= a[0].max(b[0])
        && z[1] >= a[1].min(b[1])
        && z[1] <= a[1].max(b[1])
}

pub fn closed_triangle_contains(a: P, b: P, c: P, z: P) -> bool {
    if orient(a, b, c) == 0 {
        return on_segment(a, b, z) || on_segment(b, c, z) || on_segment(a, c, z);
    }
    let s = [orient(a, b, z), orient(b, c, z), orient(c, a, z)];
    s.iter().all(|&x| x >= 0) || s.iter().all(|&x| x <= 0)
}

pub fn simplicial_oracle(pts: &[P], z: P) -> u64 {
    let m = pts.len();
    let mut count = 0;
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                if closed_triangle_contains(pts[i], pts[j], pts[k], z) {
                    count += 1;
                }
            }
        }
    }
    count
}

pub fn to_cloud(pts: &[P]) -> PointCloud {
    let rows: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] as f64, p[1] as f64]).collect();
    PointCloud::from_rows(&rows).unwrap()
}

/// Small integer coordinates make ties and collinearities common.
pub fn random_instance(seed: u64, m: usize) -> (Vec<P>, P) {
    let mut rng = stream(seed, 0);
    let pts: Vec<P> = (0..m)
        .map(|_| [rng.random_range(-4..=4), rng.random_range(-4..=4)])
        .collect();
    let z = [rng.random_range(-4..=4), rng.random_range(-4..=4)];
    (pts, z)
}
