use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::cd::TOrientation;
use crate::cloud::PointCloud;
use crate::depth::TieRule;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Bivariate normal, sd (1, 2), correlation 0.8 / 0.3 alternating by study.
    Normal,
    /// Squares of the `Normal` coordinates; mean (1, 4).
    #[serde(rename = "chisq")]
    ChiSq,
    /// Independent Cauchy coordinates with scales (1, 2) / (4, 2).
    Cauchy,
    /// Independent standard normal pairs; correlation 0.
    CorrNormal,
    /// `(Z, Z^2)`; uncorrelated but dependent.
    #[serde(rename = "corr-normal-chisq")]
    CorrNormalChiSq,
    /// Half the studies observe the `Normal` pair, the rest only its sum.
    HeteroSum,
}

pub const SCENARIO_NAMES: [&str; 6] = [
    "normal",
    "chisq",
    "cauchy",
    "corr-normal",
    "corr-normal-chisq",
    "hetero-sum",
];

const KINDS: [ScenarioKind; 6] = [
    ScenarioKind::Normal,
    ScenarioKind::ChiSq,
    ScenarioKind::Cauchy,
    ScenarioKind::CorrNormal,
    ScenarioKind::CorrNormalChiSq,
    ScenarioKind::HeteroSum,
];

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        SCENARIO_NAMES[self.id() as usize]
    }

    pub(crate) fn id(self) -> u64 {
        KINDS.iter().position(|&k| k == self).expect("listed kind") as u64
    }

    pub fn is_correlation(self) -> bool {
        matches!(self, ScenarioKind::CorrNormal | ScenarioKind::CorrNormalChiSq)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let key = match key.as_str() {
            "chi-sq" | "chisquare" | "chi-square" => "chisq",
            "corr-normal-chi-sq" => "corr-normal-chisq",
            other => other,
        };
        SCENARIO_NAMES
            .iter()
            .position(|&n| n == key)
            .map(|i| KINDS[i])
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cd,
    Gd,
    Jk,
    Clt,
    Naive,
    Ho,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cd => "cd",
            Method::Gd => "gd",
            Method::Jk => "jk",
            Method::Clt => "clt",
            Method::Naive => "naive",
            Method::Ho => "ho",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "cd" => Method::Cd,
            "gd" => Method::Gd,
            "jk" | "kj" => Method::Jk,
            "clt" => Method::Clt,
            "naive" | "naive-z" => Method::Naive,
            "ho" | "hedges-olkin" => Method::Ho,
            other => return Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        })
    }
}

/// One simulation experiment. Distribution parameters are fixed per kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Number of studies.
    pub k: usize,
    /// Per-study sample size.
    pub n: usize,
    pub reps: usize,
    /// Bootstrap replicates per study.
    pub b: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    /// Monte Carlo size of the GD/JK null law.
    #[serde(default = "default_mc")]
    pub mc_draws: usize,
    /// `HeteroSum` only: square the normal coordinates first.
    #[serde(default)]
    pub squared: bool,
    #[serde(default)]
    pub t_orientation: TOrientation,
    /// Tie rule of the CD centralities. Weak by default: counting draws of
    /// equal depth as no deeper keeps each p-value valid at bootstrap
    /// resolution.
    #[serde(default = "weak")]
    pub tie_rule: TieRule,
}

fn weak() -> TieRule {
    TieRule::Weak
}

fn default_mc() -> usize {
    crate::baselines::DEFAULT_MC_DRAWS
}

impl ScenarioSpec {
    /// Defaults for `kind`: two studies of 30 (200 for correlation, four for
    /// `HeteroSum`), B = 2000, and every method that applies.
    pub fn new(kind: ScenarioKind) -> Self {
        let (k, n, reps, methods) = match kind {
            ScenarioKind::Normal | ScenarioKind::ChiSq | ScenarioKind::Cauchy => {
                (2, 30, 10_000, vec![Method::Gd, Method::Jk, Method::Clt, Method::Cd])
            }
            ScenarioKind::CorrNormal | ScenarioKind::CorrNormalChiSq => {
                (2, 200, 2000, vec![Method::Naive, Method::Ho, Method::Cd])
            }
            ScenarioKind::HeteroSum => (4, 30, 1000, vec![Method::Gd, Method::Cd]),
        };
        Self {
            kind,
            k,
            n,
            reps,
            b: crate::cd::DEFAULT_REPLICATES,
            master_seed: 20_240_601,
            methods,
            mc_draws: default_mc(),
            squared: false,
            t_orientation: TOrientation::default(),
            tie_rule: TieRule::Weak,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(m));
        if self.reps < 100 {
            return fail(format!("reps must be at least 100, got {}", self.reps));
        }
        if self.k == 0 {
            return fail("at least one study is required".into());
        }
        if self.kind == ScenarioKind::HeteroSum && self.k < 2 {
            return fail("hetero-sum needs at least two studies".into());
        }
        if self.n < 10 {
            return fail(format!("studies need at least 10 observations, got {}", self.n));
        }
        if self.b < crate::cd::MIN_REPLICATES {
            return fail(format!(
                "B must be at least {}, got {}",
                crate::cd::MIN_REPLICATES,
                self.b
            ));
        }
        if self.methods.is_empty() {
            return fail("no methods selected".into());
        }
        if self.squared && self.kind != ScenarioKind::HeteroSum {
            return fail("`squared` applies to hetero-sum only".into());
        }
        for &m in &self.methods {
            let ok = match m {
                Method::Cd => true,
                Method::Gd | Method::Jk | Method::Clt => !self.kind.is_correlation(),
                Method::Naive | Method::Ho => self.kind.is_correlation(),
            };
            if !ok {
                return fail(format!("method `{m}` does not apply to scenario `{}`", self.kind));
            }
        }
        Ok(())
    }

    /// True parameter value under the null.
    pub fn truth(&self) -> Vec<f64> {
        match self.kind {
            ScenarioKind::Normal | ScenarioKind::Cauchy => vec![0.0, 0.0],
            ScenarioKind::ChiSq => vec![1.0, 4.0],
            ScenarioKind::HeteroSum if self.squared => vec![1.0, 4.0],
            ScenarioKind::HeteroSum => vec![0.0, 0.0],
            ScenarioKind::CorrNormal | ScenarioKind::CorrNormalChiSq => vec![0.0],
        }
    }

    /// Studies that observe the full pair; only `HeteroSum` has fewer than `k`.
    pub fn complete_studies(&self) -> usize {
        match self.kind {
            ScenarioKind::HeteroSum => self.k.div_ceil(2),
            _ => self.k,
        }
    }

    /// Data of study `index` (zero based).
    pub fn sample<R: Rng>(&self, index: usize, rng: &mut R) -> PointCloud {
        let rho = [0.8, 0.3][index % 2];
        let n = self.n;
        let mut flat = Vec::with_capacity(2 * n);
        match self.kind {
            ScenarioKind::Normal => (0..n).for_each(|_| flat.extend(correlated_pair(rho, rng))),
            ScenarioKind::ChiSq => (0..n).for_each(|_| flat.extend(correlated_pair(rho, rng).map(|z| z * z))),
            ScenarioKind::Cauchy => {
                let (s1, s2) = [(1.0, 2.0), (4.0, 2.0)][index % 2];
                let c1 = Cauchy::new(0.0, s1).expect("positive scale");
                let c2 = Cauchy::new(0.0, s2).expect("positive scale");
                (0..n).for_each(|_| flat.extend([c1.sample(rng), c2.sample(rng)]));
            }
            ScenarioKind::CorrNormal => (0..n).for_each(|_| {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                flat.extend([a, b]);
            }),
            ScenarioKind::CorrNormalChiSq => (0..n).for_each(|_| {
                let z: f64 = StandardNormal.sample(rng);
                flat.extend([z, z * z]);
            }),
            ScenarioKind::HeteroSum => {
                let complete = index < self.complete_studies();
                for _ in 0..n {
                    let mut pair = correlated_pair(rho, rng);
                    if self.squared {
                        pair = pair.map(|z| z * z);
                    }
                    if complete {
                        flat.extend(pair);
                    } else {
                        flat.push(pair[0] + pair[1]);
                    }
                }
                if !complete {
                    return PointCloud::from_flat(1, flat).expect("finite draws");
                }
            }
        }
        PointCloud::from_flat(2, flat).expect("finite draws")
    }
}

/// `(Z1, Z2)` with sd (1, 2) and correlation `rho`.
fn correlated_pair<R: Rng>(rho: f64, rng: &mut R) -> [f64; 2] {
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    [a, 2.0 * (rho * a + (1.0 - rho * rho).sqrt() * b)]
}
