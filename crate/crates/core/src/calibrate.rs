//! RANSAC over candidate line pairs.
//!
//! Each hypothesis draws two candidate pairs (weighted by score), intersects
//! them into epipoles, finds a third correspondence, fits the pencil
//! homography and scores it by transferring sampled lines from A to B and
//! correlating their barcodes.

use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barcode::{line_barcode, ncc, MotionBarcode, VideoTrack};
use crate::geometry::{
    assemble_fundamental, fit_pencil_homography, intersect, is_area_inlier, line_through, FundamentalMatrix,
    GeometryError, HomogeneousLine, HomogeneousPoint, ImageFrame, Pencil, PencilHomography,
};
use crate::matching::LinePairCandidate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrateError {
    #[error("fewer than two candidate pairs")]
    InsufficientCandidates,
    #[error("sampled lines are parallel or identical")]
    DegenerateHypothesis,
    #[error("no frame with detections in both cameras")]
    EmptyFrame,
    #[error("no informative barcode among the connecting lines")]
    NoBarcodeSignal,
    #[error("only {found} of {wanted} validation lines carried barcode signal")]
    ValidationStarved { found: usize, wanted: usize },
    #[error("every RANSAC iteration was degenerate")]
    NoValidModel,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacParams {
    pub iterations: usize,
    /// Candidates scoring below this are not sampled.
    pub theta_ncc: f64,
    pub validation_lines: usize,
    /// Stop after the batch in which a model validates above this score.
    pub early_exit: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self { iterations: 500, theta_ncc: 0.9, validation_lines: 10, early_exit: 0.95, seed: 0 }
    }
}

/// Iterations evaluated together before the early-exit check.
const BATCH: usize = 32;

/// Minimum pencil separation between the three defining lines.
const DISTINCT_SEPARATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolarModel {
    pub e_a: HomogeneousPoint,
    pub e_b: HomogeneousPoint,
    pub homography: PencilHomography,
    pub fundamental: FundamentalMatrix,
    pub validation_score: f64,
    pub defining_pairs: [LinePairCandidate; 3],
}

impl EpipolarModel {
    /// Assembles F from epipoles and three pairs and records the score.
    pub fn from_pairs(
        e_a: HomogeneousPoint,
        e_b: HomogeneousPoint,
        frame_a: &ImageFrame,
        frame_b: &ImageFrame,
        defining_pairs: [LinePairCandidate; 3],
        validation_score: f64,
    ) -> Result<Self, GeometryError> {
        let source = Pencil::new(e_a, frame_a);
        let target = Pencil::new(e_b, frame_b);
        let lines = defining_pairs.map(|p| (p.l_a, p.l_b));
        let homography = fit_pencil_homography(&lines, &source, &target)?;
        let fundamental = assemble_fundamental(&e_a, &e_b, &lines)?;
        Ok(Self { e_a, e_b, homography, fundamental, validation_score, defining_pairs })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypothesis {
    pub first: usize,
    pub second: usize,
    pub e_a: HomogeneousPoint,
    pub e_b: HomogeneousPoint,
}

/// Draws two distinct candidates with probability proportional to score
/// and intersects their lines.
pub fn sample_hypothesis<R: Rng + ?Sized>(
    candidates: &[LinePairCandidate],
    rng: &mut R,
) -> Result<Hypothesis, CalibrateError> {
    if candidates.len() < 2 {
        return Err(CalibrateError::InsufficientCandidates);
    }
    let mut weights: Vec<f64> = candidates.iter().map(|c| c.score.max(0.0)).collect();
    let first = draw(&weights, rng);
    weights[first] = 0.0;
    let second = if weights.iter().any(|&w| w > 0.0) {
        draw(&weights, rng)
    } else {
        let k = rng.random_range(0..candidates.len() - 1);
        if k >= first {
            k + 1
        } else {
            k
        }
    };
    let (c1, c2) = (&candidates[first], &candidates[second]);
    let near_infinity = |p: &HomogeneousPoint| p.unit().z.abs() < 1e-8;
    let e_a = intersect(&c1.l_a, &c2.l_a).map_err(|_| CalibrateError::DegenerateHypothesis)?;
    let e_b = intersect(&c1.l_b, &c2.l_b).map_err(|_| CalibrateError::DegenerateHypothesis)?;
    if near_infinity(&e_a) || near_infinity(&e_b) {
        return Err(CalibrateError::DegenerateHypothesis);
    }
    Ok(Hypothesis { first, second, e_a, e_b })
}

fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    match WeightedIndex::new(weights) {
        Ok(dist) => dist.sample(rng),
        Err(_) => rng.random_range(0..weights.len()),
    }
}

/// Lines from every detection of frame `s` to the epipole, with barcodes.
fn connecting_lines(video: &VideoTrack, e: &HomogeneousPoint, s: usize) -> Vec<(HomogeneousLine, MotionBarcode)> {
    video
        .detections(s)
        .iter()
        .filter_map(|d| line_through(&d.centroid(), e).ok())
        .map(|l| {
            let b = line_barcode(video, &l);
            (l, b)
        })
        .filter(|(_, b)| !b.is_constant())
        .collect()
}

/// Best barcode-matched pair among the lines joining frame `s`'s detections
/// to the epipoles of each camera.
pub fn frame_best_pair(
    e_a: &HomogeneousPoint,
    e_b: &HomogeneousPoint,
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    s: usize,
) -> Result<LinePairCandidate, CalibrateError> {
    if video_a.detections(s).is_empty() || video_b.detections(s).is_empty() {
        return Err(CalibrateError::EmptyFrame);
    }
    let ta = connecting_lines(video_a, e_a, s);
    let tb = connecting_lines(video_b, e_b, s);
    let mut best: Option<LinePairCandidate> = None;
    for (la, ba) in &ta {
        for (lb, bb) in &tb {
            let Ok(score) = ncc(ba, bb) else { continue };
            if best.is_none_or(|b| score > b.score) {
                best = Some(LinePairCandidate { l_a: *la, l_b: *lb, score, support: [s; 3] });
            }
        }
    }
    best.ok_or(CalibrateError::NoBarcodeSignal)
}

fn distinct_from(pencil: &Pencil, l: &HomogeneousLine, others: &[HomogeneousLine]) -> bool {
    others.iter().all(|o| pencil.separation(l, o) > DISTINCT_SEPARATION)
}

/// Third correspondence for a hypothesis.
///
/// A remaining candidate whose lines both pass the area inlier test against
/// the hypothesized pencils is reused, snapped onto the pencils. Otherwise a
/// random frame is connected to the epipoles in both cameras and the best
/// barcode match is taken; empty or signal-free frames are resampled up to
/// `N` times.
pub fn third_line<R: Rng + ?Sized>(
    hypothesis: &Hypothesis,
    candidates: &[LinePairCandidate],
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    rng: &mut R,
) -> Result<LinePairCandidate, CalibrateError> {
    let (fa, fb) = (video_a.image(), video_b.image());
    let pa = Pencil::new(hypothesis.e_a, fa);
    let pb = Pencil::new(hypothesis.e_b, fb);
    let used = [&candidates[hypothesis.first], &candidates[hypothesis.second]];
    let used_a = used.map(|c| c.l_a);
    let used_b = used.map(|c| c.l_b);
    let center = |f: &ImageFrame| [f.w() / 2.0, f.h() / 2.0];

    for (i, c) in candidates.iter().enumerate() {
        if i == hypothesis.first || i == hypothesis.second {
            continue;
        }
        if !(is_area_inlier(&c.l_a, &hypothesis.e_a, fa) && is_area_inlier(&c.l_b, &hypothesis.e_b, fb)) {
            continue;
        }
        let (Ok(la), Ok(lb)) = (pa.snap(&c.l_a, center(fa)), pb.snap(&c.l_b, center(fb))) else {
            continue;
        };
        if distinct_from(&pa, &la, &used_a) && distinct_from(&pb, &lb, &used_b) {
            return Ok(LinePairCandidate { l_a: la, l_b: lb, ..*c });
        }
    }

    let n = video_a.n_frames().min(video_b.n_frames());
    if n == 0 {
        return Err(CalibrateError::EmptyFrame);
    }
    let mut last = CalibrateError::EmptyFrame;
    for _ in 0..n {
        let s = rng.random_range(0..n);
        match frame_best_pair(&hypothesis.e_a, &hypothesis.e_b, video_a, video_b, s) {
            Ok(pair) => return Ok(pair),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// How lines of a pencil that meet the image rectangle are parameterized
/// for uniform sampling.
enum PencilRange {
    /// Angles of lines through a finite epipole.
    Angles { epipole: [f64; 2], lo: f64, hi: f64 },
    /// Offsets of parallel lines with the given unit normal.
    Offsets { normal: [f64; 2], lo: f64, hi: f64 },
}

impl PencilRange {
    fn new(e: &HomogeneousPoint, frame: &ImageFrame) -> Self {
        let corners = [[0.0, 0.0], [frame.w(), 0.0], [0.0, frame.h()], [frame.w(), frame.h()]];
        match e.xy() {
            Some([ex, ey]) if frame.contains(ex, ey) => Self::Angles { epipole: [ex, ey], lo: 0.0, hi: PI },
            Some([ex, ey]) => {
                let mid = (frame.h() / 2.0 - ey).atan2(frame.w() / 2.0 - ex);
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for c in corners {
                    let mut d = (c[1] - ey).atan2(c[0] - ex) - mid;
                    d = (d + PI).rem_euclid(2.0 * PI) - PI;
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
                Self::Angles { epipole: [ex, ey], lo: mid + lo, hi: mid + hi }
            }
            None => {
                let [dx, dy, _] = e.coords();
                let normal = [-dy, dx];
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for c in corners {
                    let o = normal[0] * c[0] + normal[1] * c[1];
                    lo = lo.min(o);
                    hi = hi.max(o);
                }
                Self::Offsets { normal, lo, hi }
            }
        }
    }

    fn line_at(&self, t: f64) -> Option<HomogeneousLine> {
        match *self {
            Self::Angles { epipole: [ex, ey], lo, hi } => {
                let theta = lo + t * (hi - lo);
                let (s, c) = theta.sin_cos();
                // Normal (-sin, cos) through the epipole.
                HomogeneousLine::new(-s, c, s * ex - c * ey).ok()
            }
            Self::Offsets { normal, lo, hi } => {
                let o = lo + t * (hi - lo);
                HomogeneousLine::new(normal[0], normal[1], -o).ok()
            }
        }
    }
}

/// Mean barcode correlation of `k` lines sampled uniformly (stratified) in
/// angle among the pencil lines through `e_A` that meet image A, each
/// transferred to B through the homography. Uninformative lines are
/// resampled, up to `5k` attempts in total.
pub fn validate<R: Rng + ?Sized>(
    homography: &PencilHomography,
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    k: usize,
    rng: &mut R,
) -> Result<f64, CalibrateError> {
    let range = PencilRange::new(homography.source().epipole(), video_a.image());
    let k = k.max(1);
    let mut scores = Vec::with_capacity(k);
    for attempt in 0..5 * k {
        if scores.len() == k {
            break;
        }
        let stratum = (attempt % k) as f64;
        let t = (stratum + rng.random::<f64>()) / k as f64;
        let Some(la) = range.line_at(t) else { continue };
        let Ok(lb) = homography.map(&la) else { continue };
        let ba = line_barcode(video_a, &la);
        let bb = line_barcode(video_b, &lb);
        if let Ok(s) = ncc(&ba, &bb) {
            scores.push(s);
        }
    }
    if scores.len() * 2 < k {
        return Err(CalibrateError::ValidationStarved { found: scores.len(), wanted: k });
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Scores a model assembled from epipoles and three pairs.
pub fn score_pairs<R: Rng + ?Sized>(
    e_a: HomogeneousPoint,
    e_b: HomogeneousPoint,
    pairs: [LinePairCandidate; 3],
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    validation_lines: usize,
    rng: &mut R,
) -> Result<EpipolarModel, CalibrateError> {
    let (fa, fb) = (video_a.image(), video_b.image());
    let pa = Pencil::new(e_a, fa);
    let pb = Pencil::new(e_b, fb);
    for i in 0..3 {
        for j in i + 1..3 {
            if pa.separation(&pairs[i].l_a, &pairs[j].l_a) <= DISTINCT_SEPARATION
                || pb.separation(&pairs[i].l_b, &pairs[j].l_b) <= DISTINCT_SEPARATION
            {
                return Err(GeometryError::DegeneratePencil.into());
            }
        }
    }
    let mut model = EpipolarModel::from_pairs(e_a, e_b, fa, fb, pairs, 0.0)?;
    model.validation_score = validate(&model.homography, video_a, video_b, validation_lines, rng)?;
    Ok(model)
}

fn run_iteration(
    iteration: usize,
    candidates: &[LinePairCandidate],
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    params: &RansacParams,
) -> Result<EpipolarModel, CalibrateError> {
    let mut rng = crate::rng_for(params.seed ^ crate::STREAM_RANSAC, iteration as u64);
    let mut hypothesis = Err(CalibrateError::DegenerateHypothesis);
    for _ in 0..10 {
        hypothesis = sample_hypothesis(candidates, &mut rng);
        if hypothesis.is_ok() {
            break;
        }
    }
    let hypothesis = hypothesis?;
    let third = third_line(&hypothesis, candidates, video_a, video_b, &mut rng)?;
    let pairs = [candidates[hypothesis.first], candidates[hypothesis.second], third];
    score_pairs(hypothesis.e_a, hypothesis.e_b, pairs, video_a, video_b, params.validation_lines, &mut rng)
}

/// Outcome of one RANSAC run with the score of every valid hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct RansacTrace {
    pub model: EpipolarModel,
    pub iterations_run: usize,
    /// `(iteration, validation score)` for each non-degenerate iteration.
    pub scores: Vec<(usize, f64)>,
}

pub fn ransac_calibrate(
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    candidates: &[LinePairCandidate],
    params: &RansacParams,
) -> Result<EpipolarModel, CalibrateError> {
    ransac_calibrate_with_trace(video_a, video_b, candidates, params).map(|t| t.model)
}

/// Iterations run in parallel batches with per-iteration random streams;
/// the best score wins, ties going to the lower iteration index, so the
/// result does not depend on the thread count.
pub fn ransac_calibrate_with_trace(
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    candidates: &[LinePairCandidate],
    params: &RansacParams,
) -> Result<RansacTrace, CalibrateError> {
    let pool: Vec<LinePairCandidate> = candidates.iter().copied().filter(|c| c.score >= params.theta_ncc).collect();
    if pool.len() < 2 {
        return Err(CalibrateError::InsufficientCandidates);
    }
    let iterations = params.iterations.max(1);
    let mut best: Option<(usize, EpipolarModel)> = None;
    let mut scores = Vec::new();
    let mut run = 0;
    while run < iterations {
        let end = (run + BATCH).min(iterations);
        let batch: Vec<(usize, Result<EpipolarModel, CalibrateError>)> =
            (run..end).into_par_iter().map(|i| (i, run_iteration(i, &pool, video_a, video_b, params))).collect();
        for (i, result) in batch {
            if let Ok(model) = result {
                scores.push((i, model.validation_score));
                if best.as_ref().is_none_or(|(_, b)| model.validation_score > b.validation_score) {
                    best = Some((i, model));
                }
            }
        }
        run = end;
        if best.as_ref().is_some_and(|(_, b)| b.validation_score > params.early_exit) {
            break;
        }
    }
    let (_, model) = best.ok_or(CalibrateError::NoValidModel)?;
    Ok(RansacTrace { model, iterations_run: run, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barcode::Detection;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cand(l_a: HomogeneousLine, l_b: HomogeneousLine, score: f64) -> LinePairCandidate {
        LinePairCandidate { l_a, l_b, score, support: [0, 1, 2] }
    }

    fn line(p: (f64, f64), q: (f64, f64)) -> HomogeneousLine {
        line_through(&HomogeneousPoint::finite(p.0, p.1), &HomogeneousPoint::finite(q.0, q.1)).unwrap()
    }

    #[test]
    fn score_weighted_sampling_prefers_strong_pair() {
        let a = line((0.0, 0.0), (10.0, 1.0));
        let b = line((0.0, 5.0), (10.0, 4.0));
        let c = line((0.0, 9.0), (10.0, 2.0));
        let cands = vec![cand(a, a, 0.99), cand(b, b, 1e-6), cand(c, c, 0.99)];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10_000;
        let mut weak_drawn = 0usize;
        for _ in 0..trials {
            let h = sample_hypothesis(&cands, &mut rng).unwrap();
            assert_ne!(h.first, h.second);
            if h.first == 1 || h.second == 1 {
                weak_drawn += 1;
            }
        }
        // The weak pair is drawn w.p. about 2e-6 per trial; allow a handful.
        assert!(weak_drawn <= 3, "weak pair drawn {weak_drawn} times");
    }

    #[test]
    fn two_candidate_frequency_matches_weights() {
        // Two candidates: exactly one is drawn first; frequencies follow the
        // 0.75 / 0.25 weights (chi-squared, 1 dof, 1% critical value 6.63).
        let a = line((0.0, 0.0), (10.0, 1.0));
        let b = line((0.0, 5.0), (10.0, 4.0));
        let cands = vec![cand(a, a, 0.75), cand(b, b, 0.25)];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let firsts = (0..n).filter(|_| sample_hypothesis(&cands, &mut rng).unwrap().first == 0).count();
        let (o1, o2) = (firsts as f64, (n - firsts) as f64);
        let (e1, e2) = (0.75 * n as f64, 0.25 * n as f64);
        let chi2 = (o1 - e1).powi(2) / e1 + (o2 - e2).powi(2) / e2;
        assert!(chi2 < 6.63, "chi2 = {chi2}");
    }

    #[test]
    fn parallel_lines_are_degenerate() {
        let a = line((0.0, 0.0), (10.0, 0.0));
        let b = line((0.0, 5.0), (10.0, 5.0));
        let c = line((0.0, 0.0), (10.0, 3.0));
        let cands = vec![cand(a, c, 0.9), cand(b, b, 0.9)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_hypothesis(&cands, &mut rng).unwrap_err(), CalibrateError::DegenerateHypothesis);
        assert_eq!(sample_hypothesis(&cands[..1], &mut rng).unwrap_err(), CalibrateError::InsufficientCandidates);
    }

    fn track(frames: Vec<Vec<Detection>>) -> VideoTrack {
        VideoTrack::from_detections(ImageFrame::new(200, 200), frames).unwrap()
    }

    #[test]
    fn single_detection_frame_gives_its_pair() {
        // Epipoles far to the right; each frame has one blob per camera on a
        // shared horizontal band.
        let n = 16;
        let frames_a: Vec<_> =
            (0..n).map(|t| vec![Detection::new(20.0 + t as f64, 20.0 + 10.0 * t as f64, 3.0)]).collect();
        let frames_b: Vec<_> =
            (0..n).map(|t| vec![Detection::new(150.0 - t as f64, 20.0 + 10.0 * t as f64, 3.0)]).collect();
        let (va, vb) = (track(frames_a), track(frames_b));
        let e = HomogeneousPoint::new(1.0, 0.0, 0.0).unwrap();
        let pair = frame_best_pair(&e, &e, &va, &vb, 4).unwrap();
        assert!(pair.l_a.dot(&HomogeneousPoint::finite(24.0, 60.0)).abs() < 1e-9);
        assert!(pair.l_b.dot(&HomogeneousPoint::finite(146.0, 60.0)).abs() < 1e-9);
        assert!((pair.score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_frame_is_reported() {
        let mut frames_a = vec![vec![]; 4];
        frames_a[1].push(Detection::new(10.0, 10.0, 2.0));
        let va = track(frames_a);
        let vb = va.clone();
        let e = HomogeneousPoint::finite(500.0, 100.0);
        assert_eq!(frame_best_pair(&e, &e, &va, &vb, 0).unwrap_err(), CalibrateError::EmptyFrame);
    }

    #[test]
    fn motionless_scene_starves_validation() {
        let va = track(vec![vec![]; 30]);
        let frame = *va.image();
        let pencil = Pencil::new(HomogeneousPoint::finite(500.0, 100.0), &frame);
        let l: Vec<_> = [(10.0, 10.0), (10.0, 100.0), (10.0, 190.0)]
            .iter()
            .map(|&(x, y)| pencil.line_through(&HomogeneousPoint::finite(x, y)).unwrap())
            .collect();
        let h = fit_pencil_homography(&[(l[0], l[0]), (l[1], l[1]), (l[2], l[2])], &pencil, &pencil).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(
            validate(&h, &va, &va, 10, &mut rng).unwrap_err(),
            CalibrateError::ValidationStarved { found: 0, wanted: 10 }
        );
    }

    #[test]
    fn pencil_range_covers_image_from_outside() {
        let frame = ImageFrame::new(640, 480);
        let range = PencilRange::new(&HomogeneousPoint::finite(-500.0, 240.0), &frame);
        for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let l = range.line_at(t).unwrap();
            assert!(frame.clip(&l).is_some(), "t = {t} misses the image");
        }
        let inf = PencilRange::new(&HomogeneousPoint::new(1.0, 0.2, 0.0).unwrap(), &frame);
        for t in [0.01, 0.5, 0.99] {
            assert!(frame.clip(&inf.line_at(t).unwrap()).is_some());
        }
    }
}
