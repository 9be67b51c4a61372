//! The result of one grow as written by the command line and sent by the
//! service.

use serde::{Deserialize, Serialize};

use pcrecon_core::features::FeatureSet;
use pcrecon_core::grow::{GrowParams, GrowResult, Segment, SegmentSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowReport {
    pub params: GrowParams,
    pub cells_processed: usize,
    pub cancelled: bool,
    /// The grown segments, with their ids within the session.
    pub segments: Vec<SegmentSummary>,
    /// Features of the whole session after the grow.
    pub features: FeatureSet,
}

impl GrowReport {
    pub fn new(params: GrowParams, result: &GrowResult, segments: &[Segment], features: &FeatureSet) -> Self {
        Self {
            params,
            cells_processed: result.cells_processed,
            cancelled: result.cancelled,
            segments: segments.iter().map(|s| s.summary()).collect(),
            features: features.clone(),
        }
    }
}
