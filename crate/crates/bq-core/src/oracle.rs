//! Exact solvers at enumeration scale: the ground truth the sub-optimal
//! decoders are judged against.
//!
//! Two oracles check each other. Brute force is the trust anchor; the sphere
//! decoder extends exact solves to dimensions where full enumeration is out
//! of reach. Neither is tuned for speed — they exist to be obviously correct.

use crate::decoder::{babai_decode, Candidate};
use crate::error::{Error, Result};
use crate::objective::{column_residual, BilsColumnProblem};
use crate::quantgrid::clamp_round;

/// Hard cap on the brute-force enumeration space.
pub const BRUTE_FORCE_LIMIT: u128 = 1 << 20;

/// Exhaustive minimization of the column residual over the whole box.
///
/// Enumerates lexicographically and keeps the first minimum, so ties resolve
/// to the lexicographically smallest vector.
pub fn brute_force_bils(prob: &BilsColumnProblem) -> Result<Candidate> {
    let m = prob.dim();
    let per_coord = (prob.box_hi + 1) as u128;
    let mut points: u128 = 1;
    for _ in 0..m {
        points = points.saturating_mul(per_coord);
        if points > BRUTE_FORCE_LIMIT {
            return Err(Error::TooLarge { points, limit: BRUTE_FORCE_LIMIT });
        }
    }

    let mut q = vec![0i64; m];
    let mut best_q = q.clone();
    let mut best_r = column_residual(prob, &q)?;
    loop {
        // Odometer with the last coordinate fastest: lexicographic ascending.
        let mut idx = m;
        loop {
            if idx == 0 {
                let residual = best_r;
                return Ok(Candidate { q: best_q, residual });
            }
            idx -= 1;
            if q[idx] < prob.box_hi {
                q[idx] += 1;
                for entry in q.iter_mut().skip(idx + 1) {
                    *entry = 0;
                }
                break;
            }
        }
        let r = column_residual(prob, &q)?;
        if r < best_r {
            best_r = r;
            best_q = q.clone();
        }
    }
}

/// Enumeration counters from one sphere-decoding run.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereStats {
    /// Leaves reached during enumeration (the first is always the Babai point).
    pub leaves_visited: usize,
    pub first_leaf: Option<Vec<i64>>,
    /// Interior nodes expanded.
    pub nodes_expanded: usize,
}

struct LevelState {
    idx: usize,
    center: f64,
    dist_above: f64,
    pending_first: Option<i64>,
    left: i64,
    right: i64,
}

impl LevelState {
    fn open(idx: usize, center: f64, dist_above: f64, box_hi: i64) -> Self {
        let v0 = clamp_round(center, box_hi);
        Self {
            idx,
            center,
            dist_above,
            pending_first: Some(v0),
            left: v0 - 1,
            right: v0 + 1,
        }
    }

    /// Next candidate at this level in order of nondecreasing |v − c|.
    fn next_value(&mut self, box_hi: i64) -> Option<i64> {
        if let Some(v) = self.pending_first.take() {
            return Some(v);
        }
        let l_ok = self.left >= 0;
        let r_ok = self.right <= box_hi;
        match (l_ok, r_ok) {
            (false, false) => None,
            (true, false) => {
                let v = self.left;
                self.left -= 1;
                Some(v)
            }
            (false, true) => {
                let v = self.right;
                self.right += 1;
                Some(v)
            }
            (true, true) => {
                if self.center - self.left as f64 <= self.right as f64 - self.center {
                    let v = self.left;
                    self.left -= 1;
                    Some(v)
                } else {
                    let v = self.right;
                    self.right += 1;
                    Some(v)
                }
            }
        }
    }
}

/// Schnorr–Euchner depth-first enumeration with box clamping and radius
/// shrinking, returning the exact minimizer and visit counters.
///
/// The first descent takes the nearest admissible integer at every level, so
/// the first leaf is exactly the Babai point; its residual immediately
/// becomes the pruning radius when no `radius_init` is given. A `radius_init`
/// below the optimum excludes every leaf, in which case the Babai point is
/// returned unchanged.
pub fn sphere_decode_with_stats(
    prob: &BilsColumnProblem,
    radius_init: Option<f64>,
) -> (Candidate, SphereStats) {
    let m = prob.dim();
    if m == 0 {
        let stats = SphereStats { leaves_visited: 0, first_leaf: None, nodes_expanded: 0 };
        return (Candidate { q: Vec::new(), residual: 0.0 }, stats);
    }
    let babai = babai_decode(prob);
    let mut budget = radius_init.unwrap_or(f64::INFINITY);
    let mut best_q = babai.q.clone();
    let mut best_total: Option<f64> = None;
    let mut stats = SphereStats { leaves_visited: 0, first_leaf: None, nodes_expanded: 0 };

    let center_at = |idx: usize, q: &[i64]| -> f64 {
        let mut acc = 0.0;
        for j in (idx + 1)..m {
            acc += prob.rbar.get(idx, j) * (prob.qbar[j] - q[j] as f64);
        }
        prob.qbar[idx] + acc / prob.rbar.diag(idx)
    };

    let mut q = vec![0i64; m];
    let mut stack = Vec::with_capacity(m);
    stack.push(LevelState::open(m - 1, center_at(m - 1, &q), 0.0, prob.box_hi));

    while let Some(top) = stack.last_mut() {
        let Some(v) = top.next_value(prob.box_hi) else {
            stack.pop();
            continue;
        };
        let term = prob.rbar.diag(top.idx) * (v as f64 - top.center);
        let t = top.dist_above + term * term;
        if t > budget {
            // Values at this level only get farther from the center.
            stack.pop();
            continue;
        }
        let idx = top.idx;
        q[idx] = v;
        if idx == 0 {
            stats.leaves_visited += 1;
            if stats.first_leaf.is_none() {
                stats.first_leaf = Some(q.clone());
            }
            if best_total.map_or(true, |b| t < b) {
                best_total = Some(t);
                best_q = q.clone();
                budget = budget.min(t);
            }
        } else {
            stats.nodes_expanded += 1;
            let next = LevelState::open(idx - 1, center_at(idx - 1, &q), t, prob.box_hi);
            stack.push(next);
        }
    }

    let residual = column_residual(prob, &best_q).expect("sphere candidate is in the box");
    (Candidate { q: best_q, residual }, stats)
}

/// Exact BILS solution by sphere decoding; see [`sphere_decode_with_stats`].
pub fn sphere_decode(prob: &BilsColumnProblem, radius_init: Option<f64>) -> Candidate {
    sphere_decode_with_stats(prob, radius_init).0
}
