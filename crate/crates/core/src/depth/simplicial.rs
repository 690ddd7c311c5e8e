//! Simplicial depth with closed simplices, exact for `d <= 2`.

use super::angular::{self, Dir};

/// Brute-force enumeration is used up to this many points.
pub(crate) const BRUTE_FORCE_MAX: usize = 60;

pub(crate) fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

pub(crate) fn choose3(n: u64) -> u64 {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// Closed segments `[x_i, x_j]` containing `z`, over a sorted sample.
pub(crate) fn count_1d(sorted: &[f64], z: f64) -> u64 {
    let m = sorted.len() as u64;
    let below = sorted.partition_point(|&v| v < z) as u64;
    let above = m - sorted.partition_point(|&v| v <= z) as u64;
    choose2(m) - choose2(below) - choose2(above)
}

#[inline]
fn orient(a: &[f64], b: &[f64], c: [f64; 2]) -> f64 {
    angular::cross(b[0] - a[0], b[1] - a[1], c[0] - a[0], c[1] - a[1])
}

fn in_closed_triangle(a: &[f64], b: &[f64], c: &[f64], z: [f64; 2]) -> bool {
    let o1 = orient(a, b, z);
    let o2 = orient(b, c, z);
    let o3 = orient(c, a, z);
    if o1 == 0.0 && o2 == 0.0 && o3 == 0.0 {
        // z on the common line of a degenerate triangle (or at a vertex):
        // inside iff within the bounding box of the three vertices.
        let within = |k: usize| {
            let lo = a[k].min(b[k]).min(c[k]);
            let hi = a[k].max(b[k]).max(c[k]);
            lo <= z[k] && z[k] <= hi
        };
        return within(0) && within(1);
    }
    (o1 >= 0.0 && o2 >= 0.0 && o3 >= 0.0) || (o1 <= 0.0 && o2 <= 0.0 && o3 <= 0.0)
}

/// Triangles containing `z`, by enumeration of all triples.
pub(crate) fn count_2d_brute(points: &[&[f64]], z: [f64; 2]) -> u64 {
    let m = points.len();
    let mut count = 0u64;
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                if in_closed_triangle(points[i], points[j], points[k], z) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Triangles containing `z` via the angular sweep:
/// `C(m,3) - #{triples inside an open half-plane through z}`.
pub(crate) fn count_2d_sweep<'a, I>(points: I, m: usize, z: [f64; 2], scratch: &mut Vec<Dir>) -> u64
where
    I: IntoIterator<Item = &'a [f64]>,
{
    angular::sorted_directions(points, z, scratch);
    choose3(m as u64) - angular::triples_in_open_halfplane(scratch)
}
