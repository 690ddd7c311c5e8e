use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

/// Smallest Monte Carlo reference sample.
pub const MIN_MC_DRAWS: usize = 100_000;

type TransformFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A monotone increasing map from `(0, 1]` to the reals.
#[derive(Clone)]
pub struct CustomTransform {
    name: String,
    f: Arc<TransformFn>,
}

impl CustomTransform {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

#[derive(Clone)]
pub enum Transform {
    Log,
    /// `Phi^{-1}`.
    NormalScore,
    Custom(CustomTransform),
}

impl Transform {
    pub fn name(&self) -> String {
        match self {
            Transform::Log => "log".into(),
            Transform::NormalScore => "normal-score".into(),
            Transform::Custom(c) => c.name.clone(),
        }
    }

    #[inline]
    pub fn apply(&self, u: f64) -> f64 {
        match self {
            Transform::Log => u.ln(),
            Transform::NormalScore => stats::normal_quantile(u),
            Transform::Custom(c) => (c.f)(u),
        }
    }
}

impl fmt::Debug for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Law of the combined statistic under independent uniform inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Chi-square with `2K` degrees of freedom; log transform, unit weights.
    ExactChiSq,
    /// Normal with variance `sum w_k^2`; normal-score transform.
    ExactNormal,
    MonteCarlo {
        draws: usize,
        seed: u64,
    },
}

/// `C(u) = G(sum_k w_k phi(u_k))`, where `G` is the law of the same sum over
/// independent uniforms.
#[derive(Clone)]
pub struct FusionScheme {
    transform: Transform,
    weights: Option<Vec<f64>>,
    reference: Reference,
    tables: Arc<Mutex<BTreeMap<usize, Arc<Vec<f64>>>>>,
}

impl fmt::Debug for FusionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FusionScheme")
            .field("transform", &self.transform)
            .field("weights", &self.weights)
            .field("reference", &self.reference)
            .finish()
    }
}

impl Default for FusionScheme {
    fn default() -> Self {
        Self::fisher()
    }
}

/// Serializable description of a scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub transform: String,
    pub weights: Option<Vec<f64>>,
    pub reference: Reference,
}

impl FusionScheme {
    /// `weights = None` means unit weights for any number of studies.
    pub fn new(transform: Transform, weights: Option<Vec<f64>>, reference: Reference) -> Result<Self> {
        if let Some(w) = &weights {
            if w.is_empty() || w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::InvalidArgument(
                    "fusion weights must be finite and positive".into(),
                ));
            }
        }
        match reference {
            Reference::ExactChiSq => {
                if !matches!(transform, Transform::Log) {
                    return Err(Error::InvalidArgument(
                        "the exact chi-square reference requires the log transform".into(),
                    ));
                }
                if weights.as_ref().is_some_and(|w| w.iter().any(|&x| x != 1.0)) {
                    return Err(Error::InvalidArgument(
                        "the exact chi-square reference requires unit weights".into(),
                    ));
                }
            }
            Reference::ExactNormal => {
                if !matches!(transform, Transform::NormalScore) {
                    return Err(Error::InvalidArgument(
                        "the exact normal reference requires the normal-score transform".into(),
                    ));
                }
            }
            Reference::MonteCarlo { draws, .. } => {
                if draws < MIN_MC_DRAWS {
                    return Err(Error::InvalidArgument(format!(
                        "Monte Carlo reference needs at least {MIN_MC_DRAWS} draws, got {draws}"
                    )));
                }
            }
        }
        Ok(Self {
            transform,
            weights,
            reference,
            tables: Arc::default(),
        })
    }

    /// Fisher's rule: log transform, unit weights, exact chi-square law.
    pub fn fisher() -> Self {
        Self::new(Transform::Log, None, Reference::ExactChiSq).expect("valid scheme")
    }

    /// Weighted normal scores with the exact normal law.
    pub fn normal_score(weights: Option<Vec<f64>>) -> Result<Self> {
        Self::new(Transform::NormalScore, weights, Reference::ExactNormal)
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn reference(&self) -> Reference {
        self.reference
    }

    pub fn summary(&self) -> SchemeSummary {
        SchemeSummary {
            transform: self.transform.name(),
            weights: self.weights.clone(),
            reference: self.reference,
        }
    }

    fn weight(&self, k: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[k])
    }

    /// Checks that this scheme can combine `k` inputs.
    pub fn check_arity(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::InvalidArgument("at least one input is required".into()));
        }
        match &self.weights {
            Some(w) if w.len() != k => Err(Error::DimensionMismatch {
                expected: w.len(),
                found: k,
            }),
            _ => Ok(()),
        }
    }

    /// `sum_k w_k phi(u_k)`.
    pub fn statistic(&self, u: &[f64]) -> f64 {
        u.iter()
            .enumerate()
            .map(|(k, &x)| self.weight(k) * self.transform.apply(x))
            .sum()
    }

    pub fn combine(&self, u: &[f64]) -> Result<f64> {
        self.check_arity(u.len())?;
        if let Some(bad) = u.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
            return Err(Error::Domain(format!("combined value {bad} is not in (0, 1]")));
        }
        let t = self.statistic(u);
        Ok(match self.reference {
            Reference::ExactChiSq => chi_squared_even_sf(-2.0 * t, u.len()),
            Reference::ExactNormal => {
                let norm = (0..u.len()).map(|k| self.weight(k).powi(2)).sum::<f64>().sqrt();
                stats::normal_cdf(t / norm)
            }
            Reference::MonteCarlo { .. } => {
                let table = self.table(u.len());
                table.partition_point(|&s| s <= t) as f64 / table.len() as f64
            }
        })
    }

    /// Sorted Monte Carlo sample of the statistic for `k` inputs, built once.
    pub fn table(&self, k: usize) -> Arc<Vec<f64>> {
        let Reference::MonteCarlo { draws, seed } = self.reference else {
            panic!("only Monte Carlo schemes have reference tables");
        };
        if let Some(t) = self.tables.lock().expect("reference table lock").get(&k) {
            return t.clone();
        }
        // Built without the lock held: rayon may run another caller of this
        // method on the current thread while the sample is being drawn. Two
        // concurrent builds produce the same table.
        let mut sample: Vec<f64> = (0..draws)
            .into_par_iter()
            .map_init(
                || vec![0.0; k],
                |u, m| {
                    let mut g = rng::stream(seed, m as u64);
                    u.iter_mut().for_each(|x| *x = 1.0 - g.random::<f64>());
                    self.statistic(u)
                },
            )
            .collect();
        sample.sort_unstable_by(f64::total_cmp);
        self.tables
            .lock()
            .expect("reference table lock")
            .entry(k)
            .or_insert_with(|| Arc::new(sample))
            .clone()
    }
}

/// `P{chi^2_{2k} >= x} = e^{-x/2} sum_{j<k} (x/2)^j / j!`.
pub fn chi_squared_even_sf(x: f64, k: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let h = 0.5 * x;
    let mut log_term = -h;
    let mut sum = log_term.exp();
    for j in 1..k {
        log_term += h.ln() - (j as f64).ln();
        sum += log_term.exp();
    }
    sum.min(1.0)
}

pub fn combine_values(u: &[f64], scheme: &FusionScheme) -> Result<f64> {
    scheme.combine(u)
}
