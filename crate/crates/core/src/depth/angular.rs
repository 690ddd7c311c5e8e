//! Exact angular ordering of planar directions around a query point.
//!
//! Directions are first sorted by a monotone pseudo-angle key and then
//! repaired with an exact half-plane/cross-product comparator, so integer
//! inputs are ordered without rounding artifacts.

use std::cmp::Ordering;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Dir {
    pub x: f64,
    pub y: f64,
    key: f64,
}

#[inline]
fn upper(x: f64, y: f64) -> bool {
    y > 0.0 || (y == 0.0 && x > 0.0)
}

#[inline]
pub(crate) fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

impl Dir {
    #[inline]
    fn new(x: f64, y: f64) -> Self {
        let r = x / (x.abs() + y.abs());
        let key = if upper(x, y) { 1.0 - r } else { 3.0 + r };
        Self { x, y, key }
    }

    /// Counter-clockwise angular order starting from the positive x-axis.
    #[inline]
    fn cmp_exact(&self, other: &Self) -> Ordering {
        let (ha, hb) = (upper(self.x, self.y), upper(other.x, other.y));
        if ha != hb {
            return if ha { Ordering::Less } else { Ordering::Greater };
        }
        let c = cross(self.x, self.y, other.x, other.y);
        if c > 0.0 {
            Ordering::Less
        } else if c < 0.0 {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    }

    /// Same ray from the origin.
    #[inline]
    pub fn same_ray(&self, other: &Self) -> bool {
        cross(self.x, self.y, other.x, other.y) == 0.0 && self.x * other.x + self.y * other.y > 0.0
    }

    /// `other` lies at a counter-clockwise offset in `[0, π)` from `self`.
    #[inline]
    pub fn within_half_turn(&self, other: &Self) -> bool {
        let c = cross(self.x, self.y, other.x, other.y);
        c > 0.0 || (c == 0.0 && self.x * other.x + self.y * other.y > 0.0)
    }
}

const INDEX_BITS: u32 = 21;
const INDEX_MASK: u64 = (1 << INDEX_BITS) - 1;
/// Maps pseudo-angle keys in `[0, 4)` onto `64 - INDEX_BITS` bits.
const KEY_SCALE: f64 = (1u64 << (64 - INDEX_BITS - 2)) as f64;

/// Fills `out` with the nonzero directions `p - z` in exact angular order and
/// returns the number of points coinciding with `z`.
pub(crate) fn sorted_directions<'a, I>(points: I, z: [f64; 2], out: &mut Vec<Dir>) -> usize
where
    I: IntoIterator<Item = &'a [f64]>,
{
    out.clear();
    let mut at_z = 0;
    for p in points {
        let (x, y) = (p[0] - z[0], p[1] - z[1]);
        if x == 0.0 && y == 0.0 {
            at_z += 1;
        } else {
            out.push(Dir::new(x, y));
        }
    }
    if out.len() < 1 << INDEX_BITS {
        // Sorting packed integer keys is several times faster than sorting
        // the structs; quantization ties are left to the repair pass.
        let mut keys: Vec<u64> = out
            .iter()
            .enumerate()
            .map(|(i, d)| ((d.key * KEY_SCALE) as u64) << INDEX_BITS | i as u64)
            .collect();
        keys.sort_unstable();
        let unsorted = std::mem::take(out);
        out.extend(keys.iter().map(|&k| unsorted[(k & INDEX_MASK) as usize]));
    } else {
        out.sort_unstable_by(|a, b| a.key.total_cmp(&b.key));
    }
    // Insertion pass: the key order is correct up to rounding, so this is
    // linear in practice.
    for i in 1..out.len() {
        let mut j = i;
        while j > 0 && out[j - 1].cmp_exact(&out[j]) == Ordering::Greater {
            out.swap(j - 1, j);
            j -= 1;
        }
    }
    at_z
}

/// Largest number of directions in an open half-plane through the origin.
///
/// Equals `max_s #{v : angle(v) - angle(v_s) in [0, π)}`; with `stop_above`
/// the scan returns as soon as the count exceeds that value.
pub(crate) fn max_open_halfplane(dirs: &[Dir], stop_above: Option<usize>) -> usize {
    let n = dirs.len();
    if n == 0 {
        return 0;
    }
    let mut best = 0;
    let mut j = 0usize;
    let mut s = 0usize;
    while s < n {
        j = j.max(s);
        while j < s + n && dirs[s].within_half_turn(&dirs[if j < n { j } else { j - n }]) {
            j += 1;
        }
        best = best.max(j - s);
        if let Some(limit) = stop_above {
            if best > limit {
                return best;
            }
        }
        // Skip to the next distinct ray.
        let mut next = s + 1;
        while next < n && dirs[next].same_ray(&dirs[s]) {
            next += 1;
        }
        s = next;
    }
    best
}

/// Number of direction triples contained in some open half-plane through the
/// origin (equivalently, triangles whose closed hull misses the origin).
pub(crate) fn triples_in_open_halfplane(dirs: &[Dir]) -> u64 {
    let n = dirs.len();
    let mut total = 0u64;
    let mut j = 0usize;
    let mut group_start = 0usize;
    for i in 0..n {
        if i > 0 && !dirs[i].same_ray(&dirs[i - 1]) {
            group_start = i;
        }
        let cap = group_start + n;
        j = j.max(i + 1);
        while j < cap && dirs[i].within_half_turn(&dirs[if j < n { j } else { j - n }]) {
            j += 1;
        }
        let after = (j - i - 1) as u64;
        total += after * after.saturating_sub(1) / 2;
    }
    total
}
