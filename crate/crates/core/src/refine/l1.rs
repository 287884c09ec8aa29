//! Exact minimizer of `Σ wᵢ |lᵢ · x|` over image points.
//!
//! The objective is convex and linear on every cell of the line
//! arrangement, so a minimum sits on an arrangement vertex, and a vertex
//! that no neighbouring vertex along one of its lines improves on is a
//! global minimum.

use nalgebra::Vector3;
use rand::Rng;

use super::RefineError;
use crate::geometry::{intersect, HomogeneousLine, HomogeneousPoint};

/// Lines closer than this (unit-normal coefficient distance) are merged.
const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Solution {
    pub point: HomogeneousPoint,
    pub loss: f64,
    /// Indices of two input lines meeting at the optimum.
    pub vertex: (usize, usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct L1Stats {
    pub vertices_visited: usize,
    /// Lines whose contribution to the running linear form was changed.
    pub coefficient_updates: usize,
    pub merged_lines: usize,
}

/// `Σ |l · p|` for a finite point.
pub fn l1_loss(lines: &[HomogeneousLine], p: &HomogeneousPoint) -> f64 {
    lines.iter().map(|l| l.dot(p).abs()).sum()
}

/// Evaluates every vertex. Ties within `1e-12 · max(1, best)` keep the
/// lexicographically smallest line pair.
pub fn l1_epipole_brute(lines: &[HomogeneousLine]) -> Result<L1Solution, RefineError> {
    let mut best: Option<L1Solution> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let Ok(p) = intersect(&lines[i], &lines[j]) else { continue };
            if !p.is_finite() {
                continue;
            }
            let loss = l1_loss(lines, &p);
            let better = match &best {
                None => true,
                Some(b) => loss < b.loss - 1e-12 * b.loss.max(1.0),
            };
            if better {
                best = Some(L1Solution { point: p, loss, vertex: (i, j) });
            }
        }
    }
    best.ok_or(RefineError::DegenerateArrangement)
}

struct Arrangement {
    lines: Vec<Vector3<f64>>,
    weights: Vec<f64>,
    /// Input index of each merged line's first member.
    origin: Vec<usize>,
    /// Per line, `(t, other)` sorted by position `t` along the line.
    order: Vec<Vec<(f64, usize)>>,
    /// `slot[i][j]`: index of the vertex `(i, j)` in `order[i]`.
    slot: Vec<Vec<usize>>,
}

impl Arrangement {
    fn build(input: &[HomogeneousLine]) -> (Self, usize) {
        let mut lines: Vec<Vector3<f64>> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut origin = Vec::new();
        let mut merged = 0;
        for (k, l) in input.iter().enumerate() {
            let v = l.to_vector();
            match lines.iter().position(|m| (m - v).norm() < MERGE_TOL) {
                Some(m) => {
                    weights[m] += 1.0;
                    merged += 1;
                }
                None => {
                    lines.push(v);
                    weights.push(1.0);
                    origin.push(k);
                }
            }
        }
        let n = lines.len();
        let mut order = vec![Vec::new(); n];
        let mut slot = vec![vec![usize::MAX; n]; n];
        for i in 0..n {
            let d = [-lines[i].y, lines[i].x];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let x = lines[i].cross(&lines[j]);
                if x.norm() < 1e-12 || x.z.abs() <= 1e-15 * x.xy().norm() {
                    continue;
                }
                let t = (x.x * d[0] + x.y * d[1]) / x.z;
                order[i].push((t, j));
            }
            order[i].sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (s, &(_, j)) in order[i].iter().enumerate() {
                slot[i][j] = s;
            }
        }
        (Self { lines, weights, origin, order, slot }, merged)
    }

    fn point(&self, i: usize, j: usize) -> Vector3<f64> {
        let x = self.lines[i].cross(&self.lines[j]);
        x / x.z
    }

    fn same_t(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
    }

    /// Lines through the vertex `(i, j)`, found as the cluster of equal
    /// positions around it on line `i`.
    fn incident(&self, i: usize, j: usize) -> Vec<usize> {
        let row = &self.order[i];
        let s = self.slot[i][j];
        let t = row[s].0;
        let mut out = vec![i];
        let mut lo = s;
        while lo > 0 && Self::same_t(row[lo - 1].0, t) {
            lo -= 1;
        }
        let mut k = lo;
        while k < row.len() && Self::same_t(row[k].0, t) {
            out.push(row[k].1);
            k += 1;
        }
        out
    }

    /// Nearest distinct vertices before and after `(i, j)` on every line
    /// through it.
    fn neighbours(&self, incident: &[usize], at: (usize, usize)) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let (i0, j0) = at;
        for &l in incident {
            let other = if l == i0 { j0 } else { i0 };
            let row = &self.order[l];
            let s = self.slot[l][other];
            if s == usize::MAX {
                continue;
            }
            let t = row[s].0;
            if let Some(&(_, k)) = row[..s].iter().rev().find(|(u, _)| !Self::same_t(*u, t)) {
                out.push((l, k));
            }
            if let Some(&(_, k)) = row[s + 1..].iter().find(|(u, _)| !Self::same_t(*u, t)) {
                out.push((l, k));
            }
        }
        out
    }

    fn loss(&self, p: &Vector3<f64>) -> f64 {
        self.lines.iter().zip(&self.weights).map(|(l, w)| w * l.dot(p).abs()).sum()
    }
}

/// Descends the arrangement from a random vertex, always moving to the
/// neighbouring vertex with the strictly lowest objective.
///
/// The objective is kept as a running linear form `S · x`, where `S` sums
/// the signed lines not through the current vertex; a move only touches
/// the lines through the vertices it leaves and enters.
///
/// A walk that would visit more than `n²` vertices fails with
/// [`RefineError::VisitCapExceeded`].
pub fn l1_epipole_iterative<R: Rng + ?Sized>(
    lines: &[HomogeneousLine],
    rng: &mut R,
) -> Result<(L1Solution, L1Stats), RefineError> {
    let (arr, merged) = Arrangement::build(lines);
    let n = arr.lines.len();
    let starts: Vec<(usize, usize)> = (0..n).flat_map(|i| arr.order[i].iter().map(move |&(_, j)| (i, j))).collect();
    if starts.is_empty() {
        return Err(RefineError::DegenerateArrangement);
    }
    let mut stats = L1Stats { merged_lines: merged, ..L1Stats::default() };
    let mut at = starts[rng.random_range(0..starts.len())];
    let mut q = arr.point(at.0, at.1);
    let mut inc = arr.incident(at.0, at.1);
    let mut s = Vector3::zeros();
    for k in 0..n {
        if !inc.contains(&k) {
            s += arr.weights[k] * arr.lines[k].dot(&q).signum() * arr.lines[k];
            stats.coefficient_updates += 1;
        }
    }
    let mut loss = s.dot(&q);
    stats.vertices_visited = 1;
    let cap = (n * n).max(1);

    loop {
        let mut best: Option<((usize, usize), Vector3<f64>, f64)> = None;
        for nb in arr.neighbours(&inc, at) {
            let u = arr.point(nb.0, nb.1);
            let f = s.dot(&u) + inc.iter().map(|&k| arr.weights[k] * arr.lines[k].dot(&u).abs()).sum::<f64>();
            if best.as_ref().is_none_or(|b| f < b.2) {
                best = Some((nb, u, f));
            }
        }
        let Some((nb, u, f)) = best else { break };
        if f >= loss - 1e-12 * (1.0 + loss.abs()) {
            break;
        }
        if stats.vertices_visited >= cap {
            return Err(RefineError::VisitCapExceeded(cap));
        }
        let next_inc = arr.incident(nb.0, nb.1);
        for &k in &inc {
            if !next_inc.contains(&k) {
                s += arr.weights[k] * arr.lines[k].dot(&u).signum() * arr.lines[k];
                stats.coefficient_updates += 1;
            }
        }
        for &k in &next_inc {
            if !inc.contains(&k) {
                s -= arr.weights[k] * arr.lines[k].dot(&q).signum() * arr.lines[k];
                stats.coefficient_updates += 1;
            }
        }
        at = nb;
        q = u;
        inc = next_inc;
        loss = f;
        stats.vertices_visited += 1;
    }

    let point = HomogeneousPoint::from_vector(&q).map_err(|_| RefineError::DegenerateArrangement)?;
    let loss = arr.loss(&q);
    let vertex = {
        let (a, b) = (arr.origin[at.0], arr.origin[at.1]);
        (a.min(b), a.max(b))
    };
    Ok((L1Solution { point, loss, vertex }, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(a: f64, b: f64, c: f64) -> HomogeneousLine {
        HomogeneousLine::new(a, b, c).unwrap()
    }

    #[test]
    fn three_concurrent_lines_meet_at_zero_loss() {
        let lines = [line(1.0, 0.0, -2.0), line(0.0, 1.0, -3.0), line(1.0, -1.0, 1.0)];
        let brute = l1_epipole_brute(&lines).unwrap();
        assert!(brute.loss < 1e-12);
        assert_eq!(brute.point.xy().map(|p| [p[0].round(), p[1].round()]), Some([2.0, 3.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (it, stats) = l1_epipole_iterative(&lines, &mut rng).unwrap();
        assert!(it.loss < 1e-12);
        assert_eq!(stats.vertices_visited, 1);
    }

    #[test]
    fn triangle_minimum_hand_computed() {
        // x = 0, y = 0 and x + y = 10: the loss at (0,0) is 10/√2, at the
        // other two corners it is 10, so the origin wins.
        let lines = [line(1.0, 0.0, 0.0), line(0.0, 1.0, 0.0), line(1.0, 1.0, -10.0)];
        let b = l1_epipole_brute(&lines).unwrap();
        assert!((b.loss - 10.0 / 2f64.sqrt()).abs() < 1e-9);
        for seed in 0..6 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (it, _) = l1_epipole_iterative(&lines, &mut rng).unwrap();
            assert!((it.loss - b.loss).abs() < 1e-9);
        }
    }

    #[test]
    fn parallel_lines_have_no_vertex() {
        let lines = [line(0.0, 1.0, 0.0), line(0.0, 1.0, -1.0)];
        assert_eq!(l1_epipole_brute(&lines).unwrap_err(), RefineError::DegenerateArrangement);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(l1_epipole_iterative(&lines, &mut rng).unwrap_err(), RefineError::DegenerateArrangement);
    }

    #[test]
    fn duplicates_are_merged_with_weight() {
        let d = line(1.0, 0.5, -3.0);
        let lines = [d, d, line(0.0, 1.0, 0.0), line(1.0, -1.0, 0.0), line(0.3, 1.0, -9.0)];
        let b = l1_epipole_brute(&lines).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (it, stats) = l1_epipole_iterative(&lines, &mut rng).unwrap();
        assert_eq!(stats.merged_lines, 1);
        assert!((it.loss - b.loss).abs() < 1e-9, "{} vs {}", it.loss, b.loss);
    }
}
