//! Epipole of an off-plane camera B when camera A sits on the plane of all
//! motion.
//!
//! With A on the motion plane, the only motion A sees on the epipolar line
//! through a pixel is at the pixel itself. A disc barcode around a recurring
//! pixel of A is therefore matched against the line barcodes of its B
//! candidate lines, and the surviving lines vote for the epipole of B.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barcode::{disc_barcode, line_barcode, ncc, VideoTrack};
use crate::geometry::{
    intersect, is_area_inlier, line_through, pencil_area, HomogeneousLine, HomogeneousPoint, ImageFrame,
    AREA_INLIER_FACTOR,
};
use crate::matching::{candidate_lines_b, find_recurring_pixels, MatchError, RecurringPixel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanarError {
    #[error("need at least two matched lines, found {0}")]
    InsufficientLines(usize),
    #[error("every pair of matched lines is parallel")]
    NoIntersection,
    #[error(transparent)]
    Match(#[from] MatchError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InlierTest {
    /// Area measure against the candidate's pencil, below three image widths.
    Area,
    /// Perpendicular distance from the candidate epipole below `tau_e`.
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanarParams {
    pub tau_p: f64,
    pub tau_l: f64,
    pub disc_radius: f64,
    pub theta_planar: f64,
    pub tau_e: f64,
    pub inlier_test: InlierTest,
    pub iterations: usize,
    pub max_recurring: usize,
    pub seed: u64,
}

impl Default for PlanarParams {
    fn default() -> Self {
        Self {
            tau_p: 1.0,
            tau_l: 1.5,
            disc_radius: 5.0,
            theta_planar: 0.9,
            tau_e: 3.0,
            inlier_test: InlierTest::Area,
            iterations: 500,
            max_recurring: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointLineMatch {
    pub p_a: HomogeneousPoint,
    pub l_b: HomogeneousLine,
    pub score: f64,
}

/// Best candidate line in B for a recurring pixel of A, scored against the
/// pixel's disc barcode. Equal scores keep the earlier line.
pub fn planar_candidates(
    rp: &RecurringPixel,
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    params: &PlanarParams,
) -> Option<PointLineMatch> {
    let disc = disc_barcode(video_a, &rp.position, params.disc_radius);
    if disc.is_constant() {
        return None;
    }
    let mut best: Option<PointLineMatch> = None;
    for l in candidate_lines_b(rp, video_b, params.tau_p, params.tau_l) {
        let Ok(score) = ncc(&disc, &line_barcode(video_b, &l)) else { continue };
        if best.is_none_or(|b| score > b.score) {
            best = Some(PointLineMatch { p_a: rp.position, l_b: l, score });
        }
    }
    best.filter(|m| m.score >= params.theta_planar)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarEstimate {
    pub epipole: HomogeneousPoint,
    /// Indices into the match list of the lines agreeing with the epipole.
    pub inliers: Vec<usize>,
    pub mean_residual: f64,
    pub defining_pair: (usize, usize),
}

impl PlanarEstimate {
    pub fn inlier_count(&self) -> usize {
        self.inliers.len()
    }
}

fn residual(l: &HomogeneousLine, e: &HomogeneousPoint, frame: &ImageFrame, params: &PlanarParams) -> Option<f64> {
    match params.inlier_test {
        InlierTest::Area => pencil_area(l, e, frame).ok().filter(|&a| a < AREA_INLIER_FACTOR * frame.w()),
        InlierTest::Distance => {
            e.xy()?;
            Some(l.dot(e).abs()).filter(|&d| d < params.tau_e)
        }
    }
}

fn consensus(
    i: usize,
    j: usize,
    matches: &[PointLineMatch],
    frame: &ImageFrame,
    params: &PlanarParams,
) -> Option<PlanarEstimate> {
    let e = intersect(&matches[i].l_b, &matches[j].l_b).ok()?;
    let mut inliers = Vec::new();
    let mut total = 0.0;
    for (k, m) in matches.iter().enumerate() {
        if let Some(r) = residual(&m.l_b, &e, frame, params) {
            inliers.push(k);
            total += r;
        }
    }
    let mean_residual = if inliers.is_empty() { f64::INFINITY } else { total / inliers.len() as f64 };
    Some(PlanarEstimate { epipole: e, inliers, mean_residual, defining_pair: (i, j) })
}

fn better(a: &PlanarEstimate, b: &PlanarEstimate) -> bool {
    a.inliers.len() > b.inliers.len() || (a.inliers.len() == b.inliers.len() && a.mean_residual < b.mean_residual)
}

/// Maximal-consensus epipole over pairs of matched lines.
///
/// When there are no more pairs than iterations every pair is tried;
/// otherwise pairs are drawn at random. Equal consensus goes to the lower
/// mean residual, then to the earlier pair.
pub fn planar_epipole(
    matches: &[PointLineMatch],
    frame_b: &ImageFrame,
    params: &PlanarParams,
) -> Result<PlanarEstimate, PlanarError> {
    let n = matches.len();
    if n < 2 {
        return Err(PlanarError::InsufficientLines(n));
    }
    let all_pairs = n * (n - 1) / 2;
    let pairs: Vec<(usize, usize)> = if all_pairs <= params.iterations {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        (0..params.iterations)
            .map(|it| {
                let mut rng = crate::rng_for(params.seed ^ crate::STREAM_PLANAR, it as u64);
                let i = rng.random_range(0..n);
                let j = (i + 1 + rng.random_range(0..n - 1)) % n;
                (i.min(j), i.max(j))
            })
            .collect()
    };
    let estimates: Vec<Option<PlanarEstimate>> =
        pairs.par_iter().map(|&(i, j)| consensus(i, j, matches, frame_b, params)).collect();
    let mut best: Option<PlanarEstimate> = None;
    for e in estimates.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| better(&e, b)) {
            best = Some(e);
        }
    }
    best.ok_or(PlanarError::NoIntersection)
}

/// Matched lines and epipole for a planar scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarOutcome {
    pub estimate: PlanarEstimate,
    pub matches: Vec<PointLineMatch>,
    pub recurring_pixels: usize,
}

pub fn planar_calibrate(
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    params: &PlanarParams,
) -> Result<PlanarOutcome, PlanarError> {
    if video_a.n_frames() != video_b.n_frames() {
        return Err(MatchError::Desynchronized(video_a.n_frames(), video_b.n_frames()).into());
    }
    let mut recurring = find_recurring_pixels(video_a, params.tau_p);
    recurring.truncate(params.max_recurring);
    let matches: Vec<PointLineMatch> =
        recurring.par_iter().filter_map(|rp| planar_candidates(rp, video_a, video_b, params)).collect();
    let estimate = planar_epipole(&matches, video_b.image(), params)?;
    Ok(PlanarOutcome { estimate, matches, recurring_pixels: recurring.len() })
}

/// Whether an estimated epipole agrees with a reference one: the lines
/// from three points on the central vertical line to the estimate must all
/// be area inliers of the reference pencil.
pub fn epipole_agrees(estimate: &HomogeneousPoint, reference: &HomogeneousPoint, frame: &ImageFrame) -> bool {
    let (w, h) = (frame.w(), frame.h());
    [0.25, 0.5, 0.75].iter().all(|&f| {
        let p = HomogeneousPoint::finite(w / 2.0, f * h);
        match line_through(&p, estimate) {
            Ok(l) => is_area_inlier(&l, reference, frame),
            Err(_) => false,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barcode::Detection;
    use crate::matching::Occurrence;

    fn m(l: HomogeneousLine) -> PointLineMatch {
        PointLineMatch { p_a: HomogeneousPoint::finite(0.0, 0.0), l_b: l, score: 1.0 }
    }

    fn through(e: (f64, f64), q: (f64, f64)) -> HomogeneousLine {
        line_through(&HomogeneousPoint::finite(e.0, e.1), &HomogeneousPoint::finite(q.0, q.1)).unwrap()
    }

    #[test]
    fn concurrent_lines_give_their_point() {
        let frame = ImageFrame::new(640, 480);
        let e = (300.0, -2000.0);
        let matches: Vec<_> =
            [(100.0, 300.0), (200.0, 300.0), (500.0, 50.0), (640.0, 480.0)].iter().map(|&q| m(through(e, q))).collect();
        for test in [InlierTest::Area, InlierTest::Distance] {
            let params = PlanarParams { inlier_test: test, ..PlanarParams::default() };
            let est = planar_epipole(&matches, &frame, &params).unwrap();
            assert_eq!(est.inlier_count(), 4);
            let p = est.epipole.xy().unwrap();
            assert!((p[0] - e.0).abs() < 1e-6 && (p[1] - e.1).abs() < 1e-6);
        }
    }

    #[test]
    fn one_line_is_insufficient() {
        let frame = ImageFrame::new(64, 48);
        let one = [m(through((0.0, 0.0), (1.0, 1.0)))];
        assert_eq!(
            planar_epipole(&one, &frame, &PlanarParams::default()).unwrap_err(),
            PlanarError::InsufficientLines(1)
        );
    }

    #[test]
    fn empty_b_gives_no_match() {
        let frame = ImageFrame::new(64, 48);
        let mut a = vec![vec![]; 6];
        a[0].push(Detection::new(10.0, 10.0, 2.0));
        a[3].push(Detection::new(10.0, 10.0, 2.0));
        let va = VideoTrack::from_detections(frame, a).unwrap();
        let vb = VideoTrack::from_detections(frame, vec![vec![]; 6]).unwrap();
        let rp = RecurringPixel {
            position: HomogeneousPoint::finite(10.0, 10.0),
            occurrences: vec![Occurrence { frame: 0, detection: 0 }, Occurrence { frame: 3, detection: 0 }],
        };
        assert!(planar_candidates(&rp, &va, &vb, &PlanarParams::default()).is_none());
    }

    #[test]
    fn equal_scores_keep_first_line() {
        // Two B lines with identical barcodes: the pixel's disc sees motion
        // at frames 0 and 3; B has two parallel tracks covering the same
        // frames.
        let frame = ImageFrame::new(100, 100);
        let mut a = vec![vec![]; 6];
        a[0].push(Detection::new(10.0, 10.0, 2.0));
        a[3].push(Detection::new(10.0, 10.0, 2.0));
        let mut b = vec![vec![]; 6];
        b[0] = vec![Detection::new(20.0, 20.0, 1.0), Detection::new(20.0, 80.0, 1.0)];
        b[3] = vec![Detection::new(80.0, 20.0, 1.0), Detection::new(80.0, 80.0, 1.0)];
        let va = VideoTrack::from_detections(frame, a).unwrap();
        let vb = VideoTrack::from_detections(frame, b).unwrap();
        let rp = RecurringPixel {
            position: HomogeneousPoint::finite(10.0, 10.0),
            occurrences: vec![Occurrence { frame: 0, detection: 0 }, Occurrence { frame: 3, detection: 0 }],
        };
        let first = candidate_lines_b(&rp, &vb, 1.0, 1.5)[0];
        let got = planar_candidates(&rp, &va, &vb, &PlanarParams::default()).unwrap();
        assert_eq!(got.l_b, first);
    }

    #[test]
    fn agreement_is_symmetric_and_rejects_far_epipoles() {
        let frame = ImageFrame::new(640, 480);
        let e = HomogeneousPoint::finite(320.0, -800.0);
        assert!(epipole_agrees(&e, &e, &frame));
        let near = HomogeneousPoint::finite(330.0, -790.0);
        assert!(epipole_agrees(&near, &e, &frame) && epipole_agrees(&e, &near, &frame));
        let far = HomogeneousPoint::finite(-3000.0, 240.0);
        assert!(!epipole_agrees(&far, &e, &frame));
    }
}
