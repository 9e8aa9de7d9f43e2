//! Path-Isolated Random-K Babai search with blocked look-ahead updates:
//! the batched equivalent of running the K+1 decoding paths of
//! [`kbest_decode`](crate::decoder::kbest_decode) over every column at once.
//!
//! Each `(column, path)` pair owns its center and integer buffers and its own
//! RNG stream, so no path can contaminate another and the result is
//! independent of the execution schedule. Rows are processed from m down to 1
//! in blocks of `B`: finishing a block makes its quantization errors visible
//! to the next block through one batched look-ahead update per path, followed
//! by per-row local center updates inside the block. The output contract is
//! equality with per-column K-best decoding under the same streams.

use rayon::prelude::*;

use crate::decoder::{compute_alpha, Candidate, KleinParams, KleinRule};
use crate::error::Result;
use crate::objective::{column_residual, BilsColumnProblem, JtaConfig};
use crate::quantgrid::clamp_round;
use crate::rng::path_stream;

/// Final per-path state for one column: centers and chosen integers, path
/// index major. Buffers for distinct paths never alias.
#[derive(Debug, Clone)]
pub struct PathBuffers {
    pub paths: usize,
    pub m: usize,
    /// `centers[p][i]`: the back-substituted center path `p` saw at row `i`.
    pub centers: Vec<Vec<f64>>,
    /// `ints[p][i]`: the integer path `p` committed at row `i`.
    pub ints: Vec<Vec<i64>>,
}

/// Decoding outcome for one column.
#[derive(Debug, Clone)]
pub struct ColumnDecode {
    /// Minimum-residual candidate over all paths, ties to the lowest index.
    pub best: Candidate,
    /// The reference greedy path (path 0).
    pub greedy: Candidate,
    /// Index of the winning path.
    pub best_path: u32,
}

fn decode_column_path(
    prob: &BilsColumnProblem,
    params: &KleinParams,
    rule: KleinRule,
    block_size: usize,
    seed: u64,
    column: usize,
    path: u64,
) -> (Vec<f64>, Vec<i64>) {
    let m = prob.dim();
    let rbar = &prob.rbar;
    let mut rng = (path > 0).then(|| path_stream(seed, column as u64, path));

    // Centers start as the relaxed solution broadcast; corrections accumulate
    // block by block.
    let mut centers = prob.qbar.clone();
    let mut ints = vec![0i64; m];

    let mut j_hi = m;
    while j_hi > 0 {
        let j_lo = j_hi.saturating_sub(block_size);

        // Batched look-ahead: propagate errors of all finished rows F = [j_hi, m)
        // onto the whole block J = [j_lo, j_hi) at once.
        if j_hi < m {
            for i in j_lo..j_hi {
                let mut acc = 0.0;
                for f in j_hi..m {
                    acc += rbar.get(i, f) * (prob.qbar[f] - ints[f] as f64);
                }
                centers[i] += acc / rbar.diag(i);
            }
        }

        // Local pass: rows inside the block still see each other sequentially.
        for i in (j_lo..j_hi).rev() {
            let mut acc = 0.0;
            for j in (i + 1)..j_hi {
                acc += rbar.get(i, j) * (prob.qbar[j] - ints[j] as f64);
            }
            let c = centers[i] + acc / rbar.diag(i);
            centers[i] = c;
            ints[i] = match rng.as_mut() {
                None => clamp_round(c, prob.box_hi),
                Some(rng) => crate::decoder::klein_sample_component(
                    c,
                    rbar.diag(i),
                    params.alpha,
                    prob.box_hi,
                    rule,
                    rng,
                ),
            };
        }
        j_hi = j_lo;
    }
    (centers, ints)
}

fn decode_column(
    prob: &BilsColumnProblem,
    cfg: &JtaConfig,
    column: usize,
) -> Result<(ColumnDecode, PathBuffers)> {
    let m = prob.dim();
    let params = compute_alpha(cfg.k, m, prob.rbar.min_diag())?;
    let paths = cfg.k as usize + 1;

    let mut buffers = PathBuffers {
        paths,
        m,
        centers: Vec::with_capacity(paths),
        ints: Vec::with_capacity(paths),
    };
    let mut best: Option<(Candidate, u32)> = None;
    let mut greedy: Option<Candidate> = None;
    for path in 0..paths as u64 {
        let (centers, ints) = decode_column_path(
            prob,
            &params,
            cfg.klein_rule,
            cfg.block_size,
            cfg.seed,
            column,
            path,
        );
        let residual = column_residual(prob, &ints)?;
        let cand = Candidate { q: ints.clone(), residual };
        if path == 0 {
            greedy = Some(cand.clone());
        }
        if best.as_ref().map_or(true, |(b, _)| cand.residual < b.residual) {
            best = Some((cand, path as u32));
        }
        buffers.centers.push(centers);
        buffers.ints.push(ints);
    }
    let (best, best_path) = best.expect("at least the greedy path ran");
    let greedy = greedy.expect("path 0 always runs");
    Ok((ColumnDecode { best, greedy, best_path }, buffers))
}

/// Decodes every column with K+1 isolated paths and per-column best
/// selection; identical to running [`kbest_decode`](crate::decoder::kbest_decode)
/// column by column with the same `(seed, column, path)` streams.
pub fn ppi_kbabai(probs: &[BilsColumnProblem], cfg: &JtaConfig) -> Result<Vec<ColumnDecode>> {
    Ok(ppi_kbabai_with_buffers(probs, cfg)?
        .into_iter()
        .map(|(decode, _)| decode)
        .collect())
}

/// As [`ppi_kbabai`], additionally returning every path's final buffers for
/// diagnostics and equivalence checks.
pub fn ppi_kbabai_with_buffers(
    probs: &[BilsColumnProblem],
    cfg: &JtaConfig,
) -> Result<Vec<(ColumnDecode, PathBuffers)>> {
    cfg.validate()?;
    probs
        .par_iter()
        .enumerate()
        .map(|(j, prob)| decode_column(prob, cfg, j))
        .collect()
}
