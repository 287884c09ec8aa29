//! Candidate epipolar line pairs from pixel recurrences.
//!
//! A pixel of camera A that sees foreground at two different times sees two
//! points of one viewing ray. Their images in camera B therefore lie on the
//! epipolar line of that ray, so each pair of B detections from those two
//! frames is a candidate `l_B`. Its partner `l_A` is searched among the lines
//! through the recurring pixel, scored by barcode correlation.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barcode::{line_barcode, ncc, VideoTrack};
use crate::geometry::{line_through, HomogeneousLine, HomogeneousPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("tracks are not synchronized: {0} vs {1} frames")]
    Desynchronized(usize, usize),
    #[error("no third frame has a detection on the candidate line")]
    NoThirdFrame,
    #[error("only {0} candidate line pairs survived; at least 2 are needed")]
    InsufficientCandidates(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    pub frame: usize,
    pub detection: usize,
}

/// A camera-A location where foreground recurs in at least two frames.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurringPixel {
    pub position: HomogeneousPoint,
    pub occurrences: Vec<Occurrence>,
}

impl RecurringPixel {
    pub fn frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.occurrences.iter().map(|o| o.frame)
    }
}

/// A putative pair of corresponding epipolar lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePairCandidate {
    pub l_a: HomogeneousLine,
    pub l_b: HomogeneousLine,
    pub score: f64,
    /// Frames `(t_i, t_j, t_k)` that generated the pair.
    pub support: [usize; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchParams {
    /// Recurrence tolerance in camera A, pixels.
    pub tau_p: f64,
    /// Point-on-line tolerance, pixels.
    pub tau_l: f64,
    /// Minimum barcode correlation for a retained pair.
    pub theta_ncc: f64,
    /// Process at most this many recurring pixels, largest groups first.
    pub max_recurring: usize,
    pub seed: u64,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self { tau_p: 1.0, tau_l: 1.5, theta_ncc: 0.9, max_recurring: 400, seed: 0 }
    }
}

/// Groups camera-A detections from distinct frames whose centroids are all
/// mutually within `tau_p`. Groups are formed greedily, seeded from the
/// detections with the most neighbours, and returned largest first.
pub fn find_recurring_pixels(video_a: &VideoTrack, tau_p: f64) -> Vec<RecurringPixel> {
    let mut points: Vec<(Occurrence, [f64; 2])> = Vec::new();
    for (frame, f) in video_a.frames().iter().enumerate() {
        for (detection, d) in f.detections.iter().enumerate() {
            points.push((Occurrence { frame, detection }, [d.x, d.y]));
        }
    }
    let cell = |p: [f64; 2]| ((p[0] / tau_p).floor() as i64, (p[1] / tau_p).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, (_, p)) in points.iter().enumerate() {
        grid.entry(cell(*p)).or_default().push(i);
    }
    let close = |i: usize, j: usize| {
        let (p, q) = (points[i].1, points[j].1);
        (p[0] - q[0]).hypot(p[1] - q[1]) <= tau_p
    };
    let neighbours: Vec<Vec<usize>> = (0..points.len())
        .map(|i| {
            let (cx, cy) = cell(points[i].1);
            let mut out = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                        out.extend(
                            bucket.iter().copied().filter(|&j| points[j].0.frame != points[i].0.frame && close(i, j)),
                        );
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect();

    let mut order: Vec<usize> = (0..points.len()).filter(|&i| !neighbours[i].is_empty()).collect();
    order.sort_by(|&a, &b| neighbours[b].len().cmp(&neighbours[a].len()).then(a.cmp(&b)));
    let mut assigned = vec![false; points.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for seed in order {
        if assigned[seed] {
            continue;
        }
        let origin = points[seed].1;
        let mut pool: Vec<usize> = neighbours[seed].iter().copied().filter(|&j| !assigned[j]).collect();
        pool.sort_by(|&a, &b| {
            let da = (points[a].1[0] - origin[0]).hypot(points[a].1[1] - origin[1]);
            let db = (points[b].1[0] - origin[0]).hypot(points[b].1[1] - origin[1]);
            da.total_cmp(&db).then(a.cmp(&b))
        });
        let mut group = vec![seed];
        for j in pool {
            let fresh_frame = group.iter().all(|&g| points[g].0.frame != points[j].0.frame);
            if fresh_frame && group.iter().all(|&g| close(g, j)) {
                group.push(j);
            }
        }
        if group.len() >= 2 {
            for &g in &group {
                assigned[g] = true;
            }
            groups.push(group);
        }
    }

    let mut out: Vec<RecurringPixel> = groups
        .into_iter()
        .map(|mut g| {
            g.sort_by_key(|&i| points[i].0.frame);
            let n = g.len() as f64;
            let (sx, sy) = g.iter().fold((0.0, 0.0), |(sx, sy), &i| (sx + points[i].1[0], sy + points[i].1[1]));
            RecurringPixel {
                position: HomogeneousPoint::finite(sx / n, sy / n),
                occurrences: g.iter().map(|&i| points[i].0).collect(),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.occurrences
            .len()
            .cmp(&a.occurrences.len())
            .then_with(|| a.occurrences[0].frame.cmp(&b.occurrences[0].frame))
            .then_with(|| a.occurrences[0].detection.cmp(&b.occurrences[0].detection))
    });
    out
}

/// Lines through one camera-B detection of the first occurrence frame and
/// one of the second. With three or more occurrences a line is kept only if
/// every occurrence frame has a camera-B detection within `tau_l` of it.
pub fn candidate_lines_b(rp: &RecurringPixel, video_b: &VideoTrack, tau_p: f64, tau_l: f64) -> Vec<HomogeneousLine> {
    let (Some(first), Some(second)) = (rp.occurrences.first(), rp.occurrences.get(1)) else {
        return Vec::new();
    };
    let (ti, tj) = (first.frame, second.frame);
    if ti >= video_b.n_frames() || tj >= video_b.n_frames() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for q in video_b.detections(ti) {
        for r in video_b.detections(tj) {
            if (q.x - r.x).hypot(q.y - r.y) <= tau_p {
                continue;
            }
            let Ok(l) = line_through(&q.centroid(), &r.centroid()) else {
                continue;
            };
            let collinear = rp.occurrences[2..].iter().all(|o| {
                o.frame < video_b.n_frames()
                    && video_b.detections(o.frame).iter().any(|d| l.dot(&d.centroid()).abs() <= tau_l)
            });
            if collinear {
                out.push(l);
            }
        }
    }
    out
}

/// Searches a third frame with a camera-B detection on `l_b`, then picks the
/// line from the recurring pixel to a camera-A detection of that frame whose
/// barcode best correlates with `l_b`'s.
///
/// Returns `Ok(None)` when the best correlation stays below `theta_ncc` or
/// `l_b`'s barcode is uninformative.
pub fn match_line_in_a<R: Rng + ?Sized>(
    l_b: &HomogeneousLine,
    rp: &RecurringPixel,
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    params: &MatchParams,
    rng: &mut R,
) -> Result<Option<LinePairCandidate>, MatchError> {
    Ok(match_line_counted(l_b, rp, video_a, video_b, params, rng)?.0)
}

fn match_line_counted<R: Rng + ?Sized>(
    l_b: &HomogeneousLine,
    rp: &RecurringPixel,
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    params: &MatchParams,
    rng: &mut R,
) -> Result<(Option<LinePairCandidate>, usize), MatchError> {
    let n = video_a.n_frames().min(video_b.n_frames());
    let pos = rp.position.xy().expect("recurring pixels are finite");
    let away = |d: &crate::barcode::Detection| (d.x - pos[0]).hypot(d.y - pos[1]) > params.tau_p;
    let mut order: Vec<usize> = (0..n).filter(|t| !rp.frames().any(|f| f == *t)).collect();
    order.shuffle(rng);
    let tk = order
        .into_iter()
        .find(|&t| {
            video_b.detections(t).iter().any(|d| l_b.dot(&d.centroid()).abs() <= params.tau_l)
                && video_a.detections(t).iter().any(away)
        })
        .ok_or(MatchError::NoThirdFrame)?;

    let target = line_barcode(video_b, l_b);
    let mut evaluated = 1;
    if target.is_constant() {
        return Ok((None, evaluated));
    }
    let mut best: Option<(f64, HomogeneousLine)> = None;
    for d in video_a.detections(tk).iter().filter(|d| away(d)) {
        let Ok(l_a) = line_through(&rp.position, &d.centroid()) else {
            continue;
        };
        evaluated += 1;
        let Ok(score) = ncc(&line_barcode(video_a, &l_a), &target) else {
            continue;
        };
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, l_a));
        }
    }
    let support = [rp.occurrences[0].frame, rp.occurrences[1].frame, tk];
    Ok((
        best.filter(|(s, _)| *s >= params.theta_ncc).map(|(score, l_a)| LinePairCandidate {
            l_a,
            l_b: *l_b,
            score,
            support,
        }),
        evaluated,
    ))
}

/// Candidate pairs plus bookkeeping about how they were found.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub pairs: Vec<LinePairCandidate>,
    pub recurring_pixels: usize,
    pub barcodes_evaluated: usize,
}

pub fn generate_candidates(
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    params: &MatchParams,
) -> Result<Vec<LinePairCandidate>, MatchError> {
    generate_candidates_with_stats(video_a, video_b, params).map(|c| c.pairs)
}

pub fn generate_candidates_with_stats(
    video_a: &VideoTrack,
    video_b: &VideoTrack,
    params: &MatchParams,
) -> Result<CandidateSet, MatchError> {
    if video_a.n_frames() != video_b.n_frames() {
        return Err(MatchError::Desynchronized(video_a.n_frames(), video_b.n_frames()));
    }
    let mut recurring = find_recurring_pixels(video_a, params.tau_p);
    recurring.truncate(params.max_recurring);

    let per_pixel: Vec<(Vec<LinePairCandidate>, usize)> = recurring
        .par_iter()
        .enumerate()
        .map(|(idx, rp)| {
            let mut rng = crate::rng_for(params.seed ^ crate::STREAM_MATCHING, idx as u64);
            let mut found = Vec::new();
            let mut evaluated = 0;
            for l_b in candidate_lines_b(rp, video_b, params.tau_p, params.tau_l) {
                if let Ok((hit, count)) = match_line_counted(&l_b, rp, video_a, video_b, params, &mut rng) {
                    evaluated += count;
                    found.extend(hit);
                }
            }
            (found, evaluated)
        })
        .collect();

    let barcodes_evaluated = per_pixel.iter().map(|(_, c)| c).sum();
    let mut all: Vec<LinePairCandidate> = per_pixel.into_iter().flat_map(|(f, _)| f).collect();
    all.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.support.cmp(&b.support))
            .then_with(|| a.l_a.coeffs().partial_cmp(&b.l_a.coeffs()).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut pairs: Vec<LinePairCandidate> = Vec::with_capacity(all.len());
    for c in all {
        let dup = pairs.iter().any(|k| k.l_a.approx_eq(&c.l_a, 1e-6) && k.l_b.approx_eq(&c.l_b, 1e-6));
        if !dup {
            pairs.push(c);
        }
    }
    if pairs.len() < 2 {
        return Err(MatchError::InsufficientCandidates(pairs.len()));
    }
    Ok(CandidateSet { pairs, recurring_pixels: recurring.len(), barcodes_evaluated })
}
