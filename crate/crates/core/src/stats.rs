//! Summary statistics and reference distributions shared across modules.

use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, FisherSnedecor, Normal};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Median of a slice; averages the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn coordinatewise_median(cloud: &PointCloud) -> Vec<f64> {
    let d = cloud.dim();
    let mut column = Vec::with_capacity(cloud.len());
    (0..d)
        .map(|j| {
            column.clear();
            column.extend(cloud.iter().map(|p| p[j]));
            median(&column)
        })
        .collect()
}

/// Sample Pearson correlation of a bivariate cloud. Fails only when a
/// coordinate has zero variance.
pub fn pearson(cloud: &PointCloud) -> Result<f64> {
    if cloud.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: cloud.dim(),
        });
    }
    let n = cloud.len() as f64;
    let (mut mx, mut my) = (0.0, 0.0);
    for p in cloud.iter() {
        mx += p[0];
        my += p[1];
    }
    mx /= n;
    my /= n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in cloud.iter() {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::DegenerateCorrelation);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// `Phi^{-1}`, with one Newton step on top of the library inverse, which is
/// only accurate to about 1e-11.
pub fn normal_quantile(u: f64) -> f64 {
    let n = Normal::standard();
    let x = n.inverse_cdf(u);
    if !x.is_finite() {
        return x;
    }
    let density = n.pdf(x);
    if density < 1e-300 {
        return x;
    }
    let err = if u < 0.5 { n.cdf(x) - u } else { (1.0 - u) - n.sf(x) };
    x - err / density
}

/// Two-sided standard normal p-value `2 (1 - Phi(|z|))`.
pub fn normal_two_sided(z: f64) -> f64 {
    (2.0 * Normal::standard().sf(z.abs())).min(1.0)
}

pub fn chi_squared_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).map(|c| c.sf(x)).unwrap_or(f64::NAN)
}

pub fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    FisherSnedecor::new(d1, d2).map(|f| f.sf(x)).unwrap_or(f64::NAN)
}

/// Kolmogorov–Smirnov distance between a sample and U(0,1).
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}
