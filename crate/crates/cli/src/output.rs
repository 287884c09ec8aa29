//! Result files: calibration JSON and the evaluation CSV.

use epiline::calibrate::EpipolarModel;
use epiline::geometry::{
    is_area_inlier, FundamentalMatrix, GeometryError, HomogeneousPoint, ImageFrame, Pencil, PencilHomography,
};
use epiline::planar::{PlanarOutcome, PointLineMatch};
use epiline::refine::Variant;
use epiline::sim::{evaluate_model, GroundTruth};
use epiline::{CalibrationOutcome, LinePairCandidate};
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

pub const RESULT_VERSION: u32 = 1;
pub const CSV_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "version,mode,sed_px,epipole_error_a_px,epipole_error_b_px,inlier_pct,samples";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl From<&ImageFrame> for ImageSize {
    fn from(f: &ImageFrame) -> Self {
        Self { width: f.width, height: f.height }
    }
}

impl From<ImageSize> for ImageFrame {
    fn from(s: ImageSize) -> Self {
        ImageFrame::new(s.width, s.height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    #[serde(rename = "F")]
    pub f: [f64; 9],
    #[serde(rename = "eA")]
    pub e_a: [f64; 3],
    #[serde(rename = "eB")]
    pub e_b: [f64; 3],
    pub validation_score: f64,
}

impl From<&EpipolarModel> for ModelSnapshot {
    fn from(m: &EpipolarModel) -> Self {
        Self {
            f: m.fundamental.to_row_major(),
            e_a: m.e_a.coords(),
            e_b: m.e_b.coords(),
            validation_score: m.validation_score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomographyJson {
    /// Row-major 2×2 map between pencil coordinates.
    pub matrix: [f64; 4],
    pub reference_a: [f64; 3],
    pub reference_b: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesJson {
    pub recurring_pixels: usize,
    pub barcodes_evaluated: usize,
    pub pairs: Vec<LinePairCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsJson {
    pub ransac_iterations: usize,
    pub inliers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardResult {
    pub version: u32,
    pub seed: u64,
    pub image_a: ImageSize,
    pub image_b: ImageSize,
    #[serde(rename = "F")]
    pub f: [f64; 9],
    #[serde(rename = "eA")]
    pub e_a: [f64; 3],
    #[serde(rename = "eB")]
    pub e_b: [f64; 3],
    pub homography: HomographyJson,
    pub validation_score: f64,
    pub variant: Variant,
    pub initial: ModelSnapshot,
    pub defining_pairs: Vec<LinePairCandidate>,
    pub candidates: CandidatesJson,
    pub stats: StatsJson,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarResult {
    pub version: u32,
    pub seed: u64,
    pub image_a: ImageSize,
    pub image_b: ImageSize,
    #[serde(rename = "eB")]
    pub e_b: [f64; 3],
    pub inlier_count: usize,
    pub mean_residual: f64,
    pub defining_pair: (usize, usize),
    pub inliers: Vec<usize>,
    pub matches: Vec<PointLineMatch>,
    pub recurring_pixels: usize,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum CalibrationResult {
    Standard(StandardResult),
    Planar(PlanarResult),
}

fn homography_json(h: &PencilHomography) -> HomographyJson {
    let m = h.matrix();
    HomographyJson {
        matrix: [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]],
        reference_a: h.source().reference().coeffs(),
        reference_b: h.target().reference().coeffs(),
    }
}

pub fn standard_result(
    outcome: &CalibrationOutcome,
    seed: u64,
    frame_a: &ImageFrame,
    frame_b: &ImageFrame,
    timing: Timing,
) -> StandardResult {
    let m = &outcome.model;
    StandardResult {
        version: RESULT_VERSION,
        seed,
        image_a: frame_a.into(),
        image_b: frame_b.into(),
        f: m.fundamental.to_row_major(),
        e_a: m.e_a.coords(),
        e_b: m.e_b.coords(),
        homography: homography_json(&m.homography),
        validation_score: m.validation_score,
        variant: outcome.variant,
        initial: (&outcome.initial).into(),
        defining_pairs: m.defining_pairs.to_vec(),
        candidates: CandidatesJson {
            recurring_pixels: outcome.candidates.recurring_pixels,
            barcodes_evaluated: outcome.candidates.barcodes_evaluated,
            pairs: outcome.candidates.pairs.clone(),
        },
        stats: StatsJson { ransac_iterations: outcome.ransac_iterations, inliers: outcome.inliers },
        timing,
    }
}

pub fn planar_result(
    outcome: &PlanarOutcome,
    seed: u64,
    frame_a: &ImageFrame,
    frame_b: &ImageFrame,
    timing: Timing,
) -> PlanarResult {
    let e = &outcome.estimate;
    PlanarResult {
        version: RESULT_VERSION,
        seed,
        image_a: frame_a.into(),
        image_b: frame_b.into(),
        e_b: e.epipole.coords(),
        inlier_count: e.inlier_count(),
        mean_residual: e.mean_residual,
        defining_pair: e.defining_pair,
        inliers: e.inliers.clone(),
        matches: outcome.matches.clone(),
        recurring_pixels: outcome.recurring_pixels,
        timing,
    }
}

/// Rebuilds the model stored in a standard result.
pub fn model_from_result(r: &StandardResult) -> Result<EpipolarModel, GeometryError> {
    let e_a = HomogeneousPoint::try_from(r.e_a)?;
    let e_b = HomogeneousPoint::try_from(r.e_b)?;
    let [a, b, c, d] = r.homography.matrix;
    let homography = PencilHomography::from_matrix(
        Matrix2::new(a, b, c, d),
        Pencil::new(e_a, &r.image_a.into()),
        Pencil::new(e_b, &r.image_b.into()),
    )?;
    let pairs = &r.defining_pairs;
    if pairs.len() != 3 {
        return Err(GeometryError::RankDeficientSystem);
    }
    Ok(EpipolarModel {
        e_a,
        e_b,
        homography,
        fundamental: FundamentalMatrix::from_row_major(&r.f)?,
        validation_score: r.validation_score,
        defining_pairs: [pairs[0], pairs[1], pairs[2]],
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// One evaluation row under [`CSV_HEADER`].
pub fn evaluation_csv(result: &CalibrationResult, gt: &GroundTruth, n_samples: usize) -> Result<String, GeometryError> {
    let row = match result {
        CalibrationResult::Standard(r) => {
            let f = FundamentalMatrix::from_row_major(&r.f)?;
            let e_a = HomogeneousPoint::try_from(r.e_a)?;
            let e_b = HomogeneousPoint::try_from(r.e_b)?;
            let rep = evaluate_model(
                &f,
                &e_a,
                &e_b,
                &r.candidates.pairs,
                gt,
                &r.image_a.into(),
                &r.image_b.into(),
                n_samples,
                0,
            )?;
            format!(
                "{CSV_VERSION},standard,{},{},{},{},{}",
                cell(Some(rep.sed)),
                cell(rep.epipole_error_a),
                cell(rep.epipole_error_b),
                cell(rep.inlier_rate.map(|x| 100.0 * x)),
                rep.samples
            )
        }
        CalibrationResult::Planar(r) => {
            let e_b = HomogeneousPoint::try_from(r.e_b)?;
            let frame_b: ImageFrame = r.image_b.into();
            let rate = (!r.matches.is_empty()).then(|| {
                let hits = r.matches.iter().filter(|m| is_area_inlier(&m.l_b, &gt.e_b, &frame_b)).count();
                100.0 * hits as f64 / r.matches.len() as f64
            });
            format!("{CSV_VERSION},planar,,,{},{},0", cell(e_b.distance(&gt.e_b)), cell(rate))
        }
    };
    Ok(format!("{CSV_HEADER}\n{row}\n"))
}
