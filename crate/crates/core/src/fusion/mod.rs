//! Combination of depth-CDs from independent studies into one confidence
//! curve, including studies that only see a function of the parameter.

mod scheme;
mod search;
mod study;

pub use scheme::{
    chi_squared_even_sf, combine_values, CustomTransform, FusionScheme, Reference, SchemeSummary, Transform,
    MIN_MC_DRAWS,
};
pub use search::{combined_mce, MceResult, SearchSpec};
pub use study::{combined_cv, combined_pvalue, CombinedCV, CustomMap, MapSummary, ParamMap, Study};

use crate::cd::{confidence_region, ConfidenceRegion, GridSpec};
use crate::error::Result;

pub fn combined_region<'c>(ccv: &'c CombinedCV, level: f64, grid: Option<&GridSpec>) -> Result<ConfidenceRegion<'c>> {
    confidence_region(ccv, level, grid)
}
