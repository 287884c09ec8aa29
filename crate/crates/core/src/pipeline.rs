//! The full standard-mode calibration: candidates, RANSAC, refinement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barcode::VideoTrack;
use crate::calibrate::{ransac_calibrate_with_trace, CalibrateError, EpipolarModel, RansacParams};
use crate::matching::{generate_candidates_with_stats, CandidateSet, MatchError, MatchParams};
use crate::refine::{refine_model, RefineParams, Variant};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Calibrate(#[from] CalibrateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    pub matching: MatchParams,
    pub ransac: RansacParams,
    pub refine: RefineParams,
    pub refine_enabled: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            matching: MatchParams::default(),
            ransac: RansacParams::default(),
            refine: RefineParams::default(),
            refine_enabled: true,
        }
    }
}

impl PipelineParams {
    /// Uses `seed` for every stage.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.matching.seed = seed;
        self.ransac.seed = seed;
        self.refine.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub model: EpipolarModel,
    /// The RANSAC model before refinement.
    pub initial: EpipolarModel,
    pub variant: Variant,
    pub candidates: CandidateSet,
    pub ransac_iterations: usize,
    pub inliers: usize,
}

pub fn calibrate(
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    params: &PipelineParams,
) -> Result<CalibrationOutcome, PipelineError> {
    let candidates = generate_candidates_with_stats(video_a, video_b, &params.matching)?;
    let trace = ransac_calibrate_with_trace(video_a, video_b, &candidates.pairs, &params.ransac)?;
    let initial = trace.model;
    let (model, variant, inliers) = if params.refine_enabled {
        let r = refine_model(&initial, &candidates.pairs, video_a, video_b, &params.refine);
        (r.model, r.variant, r.inliers)
    } else {
        (initial, Variant::Initial, 0)
    };
    Ok(CalibrationOutcome { model, initial, variant, candidates, ransac_iterations: trace.iterations_run, inliers })
}
