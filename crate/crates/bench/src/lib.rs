//! Shared inputs for the benchmarks.

use depthcd::rng::stream;
use depthcd::PointCloud;
use rand::Rng;
use rand_distr::StandardNormal;

/// `m` correlated bivariate normal points.
pub fn normal_cloud(m: usize, seed: u64) -> PointCloud {
    let mut rng = stream(seed, 0);
    let rows: Vec<[f64; 2]> = (0..m)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            [a, 0.6 * a + b]
        })
        .collect();
    PointCloud::from_rows(&rows).unwrap()
}
