//! Epipole re-estimation from the inlier candidate lines.
//!
//! Inliers of the RANSAC model are the candidate pairs whose two lines both
//! agree with the model's pencils under the area measure. Their lines give
//! L2 and L1 epipole estimates in each image; for each estimate a fresh
//! three-frame RANSAC rebuilds the homography, and the best validating
//! model, original included, is kept.

mod l1;

pub use l1::{l1_epipole_brute, l1_epipole_iterative, l1_loss, L1Solution, L1Stats};

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barcode::VideoTrack;
use crate::calibrate::{frame_best_pair, score_pairs, CalibrateError, EpipolarModel};
use crate::geometry::{is_area_inlier, HomogeneousLine, HomogeneousPoint, ImageFrame};
use crate::matching::LinePairCandidate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("normal equations are singular (condition {0:.3e})")]
    SingularNormalEquations(f64),
    #[error("lines do not form a vertex")]
    DegenerateArrangement,
    #[error("fewer than two inlier lines")]
    TooFewInliers,
    #[error("arrangement walk still improving after {0} vertices")]
    VisitCapExceeded(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineParams {
    /// Three-frame RANSAC iterations per refined epipole pair.
    pub iterations: usize,
    pub validation_lines: usize,
    pub seed: u64,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self { iterations: 200, validation_lines: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Initial,
    L2,
    L1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedModel {
    pub model: EpipolarModel,
    pub variant: Variant,
    pub initial: EpipolarModel,
    pub inliers: usize,
    /// Best validation score reached by each refined variant, if any.
    pub variant_scores: Vec<(Variant, f64)>,
}

/// Candidates whose lines are area inliers of the model in both images.
pub fn classify_inliers(
    model: &EpipolarModel,
    candidates: &[LinePairCandidate],
    frame_a: &ImageFrame,
    frame_b: &ImageFrame,
) -> Vec<LinePairCandidate> {
    candidates
        .iter()
        .filter(|c| is_area_inlier(&c.l_a, &model.e_a, frame_a) && is_area_inlier(&c.l_b, &model.e_b, frame_b))
        .copied()
        .collect()
}

/// Least-squares point minimizing `Σ (lᵢ · x)²` for unit-normal lines.
pub fn l2_epipole(lines: &[HomogeneousLine]) -> Result<HomogeneousPoint, RefineError> {
    if lines.len() < 2 {
        return Err(RefineError::TooFewInliers);
    }
    let mut m = Matrix2::zeros();
    let mut rhs = nalgebra::Vector2::zeros();
    for l in lines {
        let [a, b, c] = l.coeffs();
        m += Matrix2::new(a * a, a * b, a * b, b * b);
        rhs -= nalgebra::Vector2::new(a * c, b * c);
    }
    let ev = m.symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if cond > 1e12 {
        return Err(RefineError::SingularNormalEquations(cond));
    }
    let x = m.lu().solve(&rhs).ok_or(RefineError::SingularNormalEquations(cond))?;
    Ok(HomogeneousPoint::finite(x.x, x.y))
}

fn refit(
    e_a: HomogeneousPoint,
    e_b: HomogeneousPoint,
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    params: &RefineParams,
    stream: u64,
) -> Option<EpipolarModel> {
    let n = video_a.n_frames().min(video_b.n_frames());
    if n < 3 {
        return None;
    }
    let seed = params.seed ^ crate::STREAM_REFINE;
    let results: Vec<(usize, Result<EpipolarModel, CalibrateError>)> = (0..params.iterations.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng_for(seed ^ stream, i as u64);
            let frames = rand::seq::index::sample(&mut rng, n, 3);
            let mut pairs = Vec::with_capacity(3);
            for s in frames.iter() {
                match frame_best_pair(&e_a, &e_b, video_a, video_b, s) {
                    Ok(p) => pairs.push(p),
                    Err(e) => return (i, Err(e)),
                }
            }
            let pairs = [pairs[0], pairs[1], pairs[2]];
            (i, score_pairs(e_a, e_b, pairs, video_a, video_b, params.validation_lines, &mut rng))
        })
        .collect();
    let mut best: Option<EpipolarModel> = None;
    for (_, r) in results {
        if let Ok(m) = r {
            if best.as_ref().is_none_or(|b| m.validation_score > b.validation_score) {
                best = Some(m);
            }
        }
    }
    best
}

/// Refines a RANSAC model.
///
/// The initial model's own score is the bar to beat, so the returned
/// validation score is never lower than the input's.
pub fn refine_model(
    model: &EpipolarModel,
    candidates: &[LinePairCandidate],
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    params: &RefineParams,
) -> RefinedModel {
    let rng = &mut crate::rng_for(params.seed ^ crate::STREAM_REFINE, 0);
    let inliers = classify_inliers(model, candidates, video_a.image(), video_b.image());
    let la: Vec<HomogeneousLine> = inliers.iter().map(|c| c.l_a).collect();
    let lb: Vec<HomogeneousLine> = inliers.iter().map(|c| c.l_b).collect();

    let mut variants: Vec<(Variant, HomogeneousPoint, HomogeneousPoint)> = Vec::new();
    if let (Ok(a), Ok(b)) = (l2_epipole(&la), l2_epipole(&lb)) {
        variants.push((Variant::L2, a, b));
    }
    if let (Ok((a, _)), Ok((b, _))) = (l1_epipole_iterative(&la, rng), l1_epipole_iterative(&lb, rng)) {
        variants.push((Variant::L1, a.point, b.point));
    }

    let mut best = (*model, Variant::Initial);
    let mut variant_scores = Vec::new();
    for (k, (variant, e_a, e_b)) in variants.into_iter().enumerate() {
        let Some(m) = refit(e_a, e_b, video_a, video_b, params, k as u64 + 1) else { continue };
        variant_scores.push((variant, m.validation_score));
        if m.validation_score > best.0.validation_score {
            best = (m, variant);
        }
    }
    RefinedModel { model: best.0, variant: best.1, initial: *model, inliers: inliers.len(), variant_scores }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_recovers_common_point_of_exact_lines() {
        let e = HomogeneousPoint::finite(320.0, -900.0);
        let lines: Vec<_> = [(0.0, 0.0), (100.0, 400.0), (640.0, 480.0), (500.0, 20.0)]
            .iter()
            .map(|&(x, y)| crate::geometry::line_through(&e, &HomogeneousPoint::finite(x, y)).unwrap())
            .collect();
        let p = l2_epipole(&lines).unwrap().xy().unwrap();
        assert!((p[0] - 320.0).abs() < 1e-6 && (p[1] + 900.0).abs() < 1e-6);
    }

    #[test]
    fn l2_rejects_parallel_lines() {
        let lines = [HomogeneousLine::new(0.0, 1.0, 0.0).unwrap(), HomogeneousLine::new(0.0, 1.0, -5.0).unwrap()];
        assert!(matches!(l2_epipole(&lines), Err(RefineError::SingularNormalEquations(_))));
        assert_eq!(l2_epipole(&lines[..1]).unwrap_err(), RefineError::TooFewInliers);
    }
}
