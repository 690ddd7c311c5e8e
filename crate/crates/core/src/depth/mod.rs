//! Data depth on point clouds and the empirical centrality function.
//!
//! A depth ranks points center-outward against a cloud; the centrality of
//! `z` is the fraction of cloud points that are strictly less deep than `z`
//! (or no deeper, under [`TieRule::Weak`]).

mod angular;
pub(crate) mod halfspace;
mod mahalanobis;
mod simplicial;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use halfspace::Projections;
use mahalanobis::Mahalanobis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthKind {
    Mahalanobis,
    #[serde(rename = "halfspace")]
    HalfSpace,
    Simplicial,
}

impl DepthKind {
    pub fn name(self) -> &'static str {
        match self {
            DepthKind::Mahalanobis => "mahalanobis",
            DepthKind::HalfSpace => "halfspace",
            DepthKind::Simplicial => "simplicial",
        }
    }
}

impl std::str::FromStr for DepthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mahalanobis" | "md" => Ok(Self::Mahalanobis),
            "halfspace" | "half-space" | "tukey" | "hd" => Ok(Self::HalfSpace),
            "simplicial" | "sd" => Ok(Self::Simplicial),
            other => Err(Error::InvalidArgument(format!("unknown depth `{other}`"))),
        }
    }
}

/// How depth ties are handled by the centrality function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    /// Count cloud points with depth strictly below the query's.
    #[default]
    Strict,
    /// Count cloud points with depth no greater than the query's.
    Weak,
}

impl std::str::FromStr for TieRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(Self::Strict),
            "weak" => Ok(Self::Weak),
            other => Err(Error::InvalidArgument(format!("unknown tie rule `{other}`"))),
        }
    }
}

pub const DEFAULT_HALFSPACE_DIRECTIONS: usize = 512;
pub const MIN_HALFSPACE_DIRECTIONS: usize = 64;
/// Fixed planar directions behind the cheap centrality upper bound.
const BOUND_DIRECTIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthPolicy {
    pub kind: DepthKind,
    /// Random directions for half-space depth in `d >= 3`.
    pub halfspace_directions: usize,
    pub tie_rule: TieRule,
    /// Seed for the random directions.
    pub direction_seed: u64,
}

impl Default for DepthPolicy {
    fn default() -> Self {
        Self::new(DepthKind::HalfSpace)
    }
}

impl DepthPolicy {
    pub fn new(kind: DepthKind) -> Self {
        Self {
            kind,
            halfspace_directions: DEFAULT_HALFSPACE_DIRECTIONS,
            tie_rule: TieRule::Strict,
            direction_seed: 0,
        }
    }

    pub fn halfspace() -> Self {
        Self::new(DepthKind::HalfSpace)
    }

    pub fn simplicial() -> Self {
        Self::new(DepthKind::Simplicial)
    }

    pub fn mahalanobis() -> Self {
        Self::new(DepthKind::Mahalanobis)
    }

    pub fn with_tie_rule(mut self, tie_rule: TieRule) -> Self {
        self.tie_rule = tie_rule;
        self
    }

    pub fn with_directions(mut self, count: usize, seed: u64) -> Self {
        self.halfspace_directions = count;
        self.direction_seed = seed;
        self
    }

    /// Whether the depth is computed exactly (and hence affine invariant) in
    /// dimension `dim`.
    pub fn is_affine_invariant(&self, dim: usize) -> bool {
        match self.kind {
            DepthKind::Mahalanobis => true,
            DepthKind::HalfSpace | DepthKind::Simplicial => dim <= 2,
        }
    }
}

/// A depth value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DepthValue(f64);

impl DepthValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<DepthValue> for f64 {
    fn from(d: DepthValue) -> f64 {
        d.0
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Mahalanobis(Mahalanobis),
    HalfSpaceLine(Vec<f64>),
    HalfSpacePlane(PointCloud),
    HalfSpaceApprox(Projections),
    SimplicialLine(Vec<f64>),
    SimplicialPlane(PointCloud),
}

/// A cloud prepared for repeated depth queries under one policy.
#[derive(Debug, Clone)]
pub struct DepthEvaluator {
    dim: usize,
    m: usize,
    engine: Engine,
}

fn sorted_values(cloud: &PointCloud) -> Vec<f64> {
    let mut v = cloud.as_flat().to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

impl DepthEvaluator {
    pub fn new(cloud: &PointCloud, policy: &DepthPolicy) -> Result<Self> {
        let dim = cloud.dim();
        let m = cloud.len();
        let engine = match (policy.kind, dim) {
            (DepthKind::Mahalanobis, _) => Engine::Mahalanobis(Mahalanobis::new(cloud)?),
            (DepthKind::HalfSpace, 1) => Engine::HalfSpaceLine(sorted_values(cloud)),
            (DepthKind::HalfSpace, 2) => Engine::HalfSpacePlane(cloud.clone()),
            (DepthKind::HalfSpace, _) => {
                if policy.halfspace_directions < MIN_HALFSPACE_DIRECTIONS {
                    return Err(Error::InvalidArgument(format!(
                        "half-space depth needs at least {MIN_HALFSPACE_DIRECTIONS} directions, got {}",
                        policy.halfspace_directions
                    )));
                }
                Engine::HalfSpaceApprox(Projections::random(
                    cloud,
                    policy.halfspace_directions,
                    policy.direction_seed,
                ))
            }
            (DepthKind::Simplicial, 1 | 2) => {
                if m < dim + 1 {
                    return Err(Error::TooFewPoints {
                        needed: dim + 1,
                        found: m,
                    });
                }
                if dim == 1 {
                    Engine::SimplicialLine(sorted_values(cloud))
                } else {
                    Engine::SimplicialPlane(cloud.clone())
                }
            }
            (DepthKind::Simplicial, _) => {
                return Err(Error::UnsupportedDimension {
                    depth: "simplicial",
                    dim,
                })
            }
        };
        Ok(Self { dim, m, engine })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points in the reference cloud.
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn depth(&self, z: &[f64]) -> Result<DepthValue> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: z.len(),
            });
        }
        Ok(DepthValue(self.depth_with(z, &mut Vec::new())))
    }

    fn depth_with(&self, z: &[f64], scratch: &mut Vec<angular::Dir>) -> f64 {
        let m = self.m as f64;
        match &self.engine {
            Engine::Mahalanobis(md) => md.depth(z),
            Engine::HalfSpaceLine(sorted) => halfspace::count_1d(sorted, z[0]) as f64 / m,
            Engine::HalfSpacePlane(cloud) => {
                halfspace::count_2d(cloud.iter(), self.m, [z[0], z[1]], scratch) as f64 / m
            }
            Engine::HalfSpaceApprox(proj) => proj.min_count(z) as f64 / m,
            Engine::SimplicialLine(sorted) => {
                simplicial::count_1d(sorted, z[0]) as f64 / simplicial::choose2(self.m as u64) as f64
            }
            Engine::SimplicialPlane(cloud) => {
                let total = simplicial::choose3(self.m as u64) as f64;
                simplicial_count_2d(cloud, [z[0], z[1]], scratch) as f64 / total
            }
        }
    }

    /// Depths of many query points, in order. Parallel over points.
    pub fn depths_of(&self, points: &PointCloud) -> Result<Vec<f64>> {
        points.check_query(&vec![0.0; self.dim])?;
        Ok((0..points.len())
            .into_par_iter()
            .map_init(Vec::new, |scratch, i| self.depth_with(points.point(i), scratch))
            .collect())
    }
}

fn simplicial_count_2d(cloud: &PointCloud, z: [f64; 2], scratch: &mut Vec<angular::Dir>) -> u64 {
    if cloud.len() <= simplicial::BRUTE_FORCE_MAX {
        let refs: Vec<&[f64]> = cloud.iter().collect();
        simplicial::count_2d_brute(&refs, z)
    } else {
        simplicial::count_2d_sweep(cloud.iter(), cloud.len(), z, scratch)
    }
}

/// A cloud together with the depth of each of its own points, ready to
/// answer centrality queries in `O(depth + log m)`.
#[derive(Debug, Clone)]
pub struct RankedCloud {
    evaluator: DepthEvaluator,
    depths: Vec<f64>,
    sorted: Vec<f64>,
    tie_rule: TieRule,
    bound: Option<(Projections, f64)>,
}

impl RankedCloud {
    pub fn new(cloud: &PointCloud, policy: &DepthPolicy) -> Result<Self> {
        let evaluator = DepthEvaluator::new(cloud, policy)?;
        let depths = evaluator.depths_of(cloud)?;
        Ok(Self::assemble(cloud, evaluator, depths, policy.tie_rule))
    }

    /// Uses previously computed per-point depths without recomputing them.
    pub fn from_cached(cloud: &PointCloud, policy: &DepthPolicy, depths: Vec<f64>) -> Result<Self> {
        if depths.len() != cloud.len() {
            return Err(Error::DimensionMismatch {
                expected: cloud.len(),
                found: depths.len(),
            });
        }
        let evaluator = DepthEvaluator::new(cloud, policy)?;
        Ok(Self::assemble(cloud, evaluator, depths, policy.tie_rule))
    }

    fn assemble(cloud: &PointCloud, evaluator: DepthEvaluator, depths: Vec<f64>, tie_rule: TieRule) -> Self {
        let mut sorted = depths.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let bound = matches!(evaluator.engine, Engine::HalfSpacePlane(_)).then(|| {
            (
                Projections::planar(cloud, BOUND_DIRECTIONS),
                halfspace::projection_tolerance(cloud),
            )
        });
        Self {
            evaluator,
            depths,
            sorted,
            tie_rule,
            bound,
        }
    }

    pub fn evaluator(&self) -> &DepthEvaluator {
        &self.evaluator
    }

    /// Depth of each cloud point against the cloud, in cloud order.
    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn tie_rule(&self) -> TieRule {
        self.tie_rule
    }

    /// Centrality of a depth value against the cloud's own depths.
    pub fn centrality_of_depth(&self, depth: f64) -> f64 {
        let count = match self.tie_rule {
            TieRule::Strict => self.sorted.partition_point(|&d| d < depth),
            TieRule::Weak => self.sorted.partition_point(|&d| d <= depth),
        };
        count as f64 / self.sorted.len() as f64
    }

    pub fn centrality(&self, z: &[f64]) -> Result<f64> {
        Ok(self.centrality_of_depth(self.evaluator.depth(z)?.value()))
    }

    /// A cheap value never below [`Self::centrality`].
    pub fn centrality_upper_bound(&self, z: &[f64]) -> Result<f64> {
        match &self.bound {
            Some((proj, tol)) => {
                if z.len() != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: z.len(),
                    });
                }
                let ub = proj.min_count_upper(z, *tol) as f64 / self.len() as f64;
                Ok(self.centrality_of_depth(ub))
            }
            None => self.centrality(z),
        }
    }
}

pub fn depth(cloud: &PointCloud, z: &[f64], policy: &DepthPolicy) -> Result<DepthValue> {
    cloud.check_query(z)?;
    DepthEvaluator::new(cloud, policy)?.depth(z)
}

/// `1 / (1 + (z - mean)' S^{-1} (z - mean))` with the cloud's sample moments.
pub fn mahalanobis_depth(cloud: &PointCloud, z: &[f64]) -> Result<DepthValue> {
    depth(cloud, z, &DepthPolicy::mahalanobis())
}

/// Tukey depth: the smallest fraction of the cloud in a closed half-space
/// containing `z`. Exact for `d <= 2`, approximate with the default random
/// directions otherwise.
pub fn halfspace_depth(cloud: &PointCloud, z: &[f64]) -> Result<DepthValue> {
    depth(cloud, z, &DepthPolicy::halfspace())
}

/// Fraction of closed simplices spanned by `d + 1` cloud points that
/// contain `z`. Only `d <= 2` is supported.
pub fn simplicial_depth(cloud: &PointCloud, z: &[f64]) -> Result<DepthValue> {
    depth(cloud, z, &DepthPolicy::simplicial())
}

/// Exact half-space depth numerator (points), `d <= 2`.
pub fn halfspace_depth_count(cloud: &PointCloud, z: &[f64]) -> Result<usize> {
    cloud.check_query(z)?;
    match cloud.dim() {
        1 => Ok(halfspace::count_1d(&sorted_values(cloud), z[0])),
        2 => Ok(halfspace::count_2d(
            cloud.iter(),
            cloud.len(),
            [z[0], z[1]],
            &mut Vec::new(),
        )),
        d => Err(Error::UnsupportedDimension {
            depth: "exact half-space",
            dim: d,
        }),
    }
}

/// Exact simplicial depth numerator (simplices), `d <= 2`.
pub fn simplicial_depth_count(cloud: &PointCloud, z: &[f64]) -> Result<u64> {
    cloud.check_query(z)?;
    match cloud.dim() {
        1 => Ok(simplicial::count_1d(&sorted_values(cloud), z[0])),
        2 => Ok(simplicial_count_2d(cloud, [z[0], z[1]], &mut Vec::new())),
        d => Err(Error::UnsupportedDimension {
            depth: "simplicial",
            dim: d,
        }),
    }
}

/// Empirical centrality of `z` against `cloud`.
///
/// Planar half-space depth takes a path that only resolves the depths needed
/// to count the points below `z`; every other policy ranks the whole cloud.
pub fn centrality(cloud: &PointCloud, z: &[f64], policy: &DepthPolicy) -> Result<f64> {
    cloud.check_query(z)?;
    if policy.kind == DepthKind::HalfSpace && cloud.dim() == 2 {
        let k0 = halfspace::count_2d(cloud.iter(), cloud.len(), [z[0], z[1]], &mut Vec::new());
        let threshold = match policy.tie_rule {
            TieRule::Strict => k0,
            TieRule::Weak => k0 + 1,
        };
        return Ok(halfspace::count_below_2d(cloud, threshold) as f64 / cloud.len() as f64);
    }
    RankedCloud::new(cloud, policy)?.centrality(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f64]) -> PointCloud {
        PointCloud::from_values(values).unwrap()
    }

    #[test]
    fn halfspace_on_the_line() {
        let c = line(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(halfspace_depth(&c, &[3.0]).unwrap().value(), 0.6);
        assert_eq!(halfspace_depth(&c, &[1.0]).unwrap().value(), 0.2);
    }

    #[test]
    fn triangle_exterior_and_centroid() {
        let c = PointCloud::from_rows(&[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]]).unwrap();
        assert_eq!(halfspace_depth(&c, &[10.0, 10.0]).unwrap().value(), 0.0);
        assert_eq!(simplicial_depth(&c, &[1.0, 1.0]).unwrap().value(), 1.0);
        assert_eq!(simplicial_depth(&c, &[5.0, 5.0]).unwrap().value(), 0.0);
    }

    #[test]
    fn mahalanobis_peaks_at_mean() {
        let c = PointCloud::from_rows(&[[0.0, 1.0], [1.0, 0.0], [2.0, 3.0], [4.0, 1.0], [1.5, 2.5]]).unwrap();
        let mean = c.mean();
        assert!((mahalanobis_depth(&c, &mean).unwrap().value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mahalanobis_rejects_singular_and_small_clouds() {
        let collinear = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        assert!(matches!(
            mahalanobis_depth(&collinear, &[0.0, 0.0]),
            Err(Error::SingularCovariance { .. })
        ));
        let tiny = PointCloud::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            mahalanobis_depth(&tiny, &[0.0, 0.0]),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn simplicial_rejects_three_dimensions() {
        let c = PointCloud::from_rows(&[[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(matches!(
            simplicial_depth(&c, &[0.1, 0.1, 0.1]),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn too_few_directions_rejected_in_three_dimensions() {
        let c = PointCloud::from_rows(&[[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let policy = DepthPolicy::halfspace().with_directions(16, 1);
        assert!(depth(&c, &[0.0; 3], &policy).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let c = line(&[1.0, 2.0]);
        assert!(matches!(
            halfspace_depth(&c, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn centrality_of_unique_deepest_point() {
        let c = line(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        for policy in [
            DepthPolicy::halfspace(),
            DepthPolicy::simplicial(),
            DepthPolicy::mahalanobis(),
        ] {
            assert_eq!(centrality(&c, &[3.0], &policy).unwrap(), 0.8, "{:?}", policy.kind);
        }
        assert_eq!(centrality(&c, &[9.0], &DepthPolicy::halfspace()).unwrap(), 0.0);
        let weak = DepthPolicy::halfspace().with_tie_rule(TieRule::Weak);
        assert_eq!(centrality(&c, &[3.0], &weak).unwrap(), 1.0);
    }

    #[test]
    fn planar_fast_centrality_matches_ranking() {
        use rand::Rng;
        let mut rng = crate::rng::stream(11, 0);
        for trial in 0..6 {
            let m = [50, 120, 400][trial % 3];
            let pts: Vec<[f64; 2]> = (0..m)
                .map(|_| [rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>().powi(2) * 3.0])
                .collect();
            let c = PointCloud::from_rows(&pts).unwrap();
            for tie in [TieRule::Strict, TieRule::Weak] {
                let policy = DepthPolicy::halfspace().with_tie_rule(tie);
                let ranked = RankedCloud::new(&c, &policy).unwrap();
                for q in 0..15 {
                    let z = if q < 5 {
                        pts[q * 7]
                    } else {
                        [rng.random::<f64>() * 3.0 - 1.5, rng.random::<f64>() * 2.0]
                    };
                    let slow = ranked.centrality(&z).unwrap();
                    let fast = centrality(&c, &z, &policy).unwrap();
                    assert_eq!(slow, fast, "m={m} z={z:?} tie={tie:?}");
                    assert!(ranked.centrality_upper_bound(&z).unwrap() >= slow);
                }
            }
        }
    }
}
