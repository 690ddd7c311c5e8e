//! Depth-based confidence distributions and their fusion across studies.

pub mod baselines;
pub mod cd;
pub mod cloud;
pub mod depth;
pub mod error;
pub mod fusion;
pub mod linalg;
pub mod rng;
pub mod simlab;
pub mod stats;

pub use baselines::{GdNull, StudySummary, TestReport, Weighting};
pub use cd::{
    bootstrap_cd, bootstrap_t_cd, cd_pvalue, confidence_region, mce, pivot_cd, BootstrapTOptions, ConfidenceCurve,
    ConfidenceRegion, DepthCD, Estimator, GridSpec, PivotSpec,
};
pub use cloud::PointCloud;
pub use depth::{
    centrality, halfspace_depth, mahalanobis_depth, simplicial_depth, DepthEvaluator, DepthKind, DepthPolicy,
    DepthValue, RankedCloud, TieRule,
};
pub use error::{Error, Result};
pub use fusion::{
    combine_values, combined_cv, combined_mce, combined_pvalue, combined_region, CombinedCV, FusionScheme, ParamMap,
    Reference, SearchSpec, Study, Transform,
};
