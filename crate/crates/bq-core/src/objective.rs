//! The joint target-alignment objective and its reduction to per-column
//! box-constrained integer least squares.
//!
//! The layer objective is
//! `S(Ŵ) = ‖X̃Ŵ − Y*(μ)‖_F² + λ²‖Ŵ − W‖_F²` with the interpolated target
//! `Y*(μ) = (1−μ)·XW + μ·X̃W`. Stacking `[X̃; λI]` is never materialized:
//! every use reduces to the Gram matrix `X̃ᵀX̃ + λ²I` and the right-hand side
//! `X̃ᵀY* + λ²W`, which keeps memory at O(m² + mn). Per column, the problem
//! becomes `min ‖R̄(q − q̄)‖₂²` over the integer box, with `R̄ = R·diag(s)`
//! and `q̄` the relaxed real solution.

use crate::decoder::KleinRule;
use crate::error::{Error, Result};
use crate::matlin::{cholesky, gram_regularized, solve_lower, solve_upper, DenseMatrix, UpperTriangular};
use crate::quantgrid::QuantGrid;

/// Run configuration: objective knobs, box geometry, search width, and the
/// reproducibility seed.
#[derive(Debug, Clone, PartialEq)]
pub struct JtaConfig {
    /// Target interpolation knob in [0, 1]; 0 aligns to the full-precision
    /// reference, 1 to the runtime-consistent target.
    pub mu: f64,
    /// Weight-drift regularizer weight (enters the score as λ²).
    pub lambda: f64,
    /// Number of randomized decoding paths; path 0 is always the greedy one.
    pub k: u32,
    pub wbit: u8,
    /// Rows per calibration group within a column; 0 means one group.
    pub group_size: usize,
    /// Row block size for the batched look-ahead decoder.
    pub block_size: usize,
    pub seed: u64,
    pub klein_rule: KleinRule,
}

impl JtaConfig {
    /// Paper-default knobs per bit-width: (μ, λ) = (0.6, 0.6) at 3 bits and
    /// below, (0.1, 0.2) at 4 bits and above, K = 5 everywhere.
    pub fn for_wbit(wbit: u8) -> Self {
        let (mu, lambda) = if wbit <= 3 { (0.6, 0.6) } else { (0.1, 0.2) };
        Self {
            mu,
            lambda,
            k: 5,
            wbit,
            group_size: 0,
            block_size: 8,
            seed: 0,
            klein_rule: KleinRule::DiagSquared,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(Error::InvalidParameter(format!("mu = {} not in [0, 1]", self.mu)));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda = {} negative", self.lambda)));
        }
        if self.k < 1 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if self.block_size < 1 {
            return Err(Error::InvalidParameter("block_size must be >= 1".into()));
        }
        if !(2..=8).contains(&self.wbit) {
            return Err(Error::InvalidParameter(format!("wbit = {} not in [2, 8]", self.wbit)));
        }
        Ok(())
    }

    pub fn box_hi(&self) -> i64 {
        (1i64 << self.wbit) - 1
    }
}

/// The reduced stacked system `[X̃; λI]·Ŵ ≈ [Y*; λW]`: its Cholesky factor
/// and the normal-equation right-hand side `X̃ᵀY* + λ²W`.
#[derive(Debug, Clone)]
pub struct StackedSystem {
    pub r: UpperTriangular,
    pub rhs: DenseMatrix,
}

/// One column's decoding state: scaled factor `R̄ = R·diag(s)`, relaxed
/// solution `q̄`, zero-point vector, and the box upper bound.
#[derive(Debug, Clone)]
pub struct BilsColumnProblem {
    pub rbar: UpperTriangular,
    pub qbar: Vec<f64>,
    pub z: Vec<f64>,
    pub box_hi: i64,
}

impl BilsColumnProblem {
    pub fn new(rbar: UpperTriangular, qbar: Vec<f64>, z: Vec<f64>, box_hi: i64) -> Result<Self> {
        if qbar.len() != rbar.dim() || z.len() != rbar.dim() {
            return Err(Error::DimensionMismatch(format!(
                "qbar {} / z {} vs dim {}",
                qbar.len(),
                z.len(),
                rbar.dim()
            )));
        }
        if box_hi < 1 {
            return Err(Error::InvalidParameter(format!("box_hi = {box_hi} < 1")));
        }
        Ok(Self { rbar, qbar, z, box_hi })
    }

    pub fn dim(&self) -> usize {
        self.rbar.dim()
    }
}

/// The interpolated alignment target `Y*(μ) = (1−μ)·XW + μ·X̃W`.
///
/// Endpoints return the corresponding product bit-exactly, and interior μ is
/// evaluated as `XW + μ·(X̃W − XW)`, so the target is exactly affine in μ.
pub fn build_target(
    x: &DenseMatrix,
    xt: &DenseMatrix,
    w: &DenseMatrix,
    mu: f64,
) -> Result<DenseMatrix> {
    if x.rows() != xt.rows() || x.cols() != xt.cols() {
        return Err(Error::DimensionMismatch(format!(
            "X {}x{} vs X̃ {}x{}",
            x.rows(),
            x.cols(),
            xt.rows(),
            xt.cols()
        )));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!("mu = {mu} not in [0, 1]")));
    }
    let base = x.matmul(w)?;
    if mu == 0.0 {
        return Ok(base);
    }
    let runtime = xt.matmul(w)?;
    if mu == 1.0 {
        return Ok(runtime);
    }
    let data = base
        .data()
        .iter()
        .zip(runtime.data())
        .map(|(&a, &b)| a + mu * (b - a))
        .collect();
    Ok(DenseMatrix::from_parts(base.rows(), base.cols(), data))
}

/// Builds the factored stacked system for a layer.
pub fn build_stacked_system(
    xt: &DenseMatrix,
    x: &DenseMatrix,
    w: &DenseMatrix,
    mu: f64,
    lambda: f64,
) -> Result<StackedSystem> {
    let ystar = build_target(x, xt, w, mu)?;
    let gram = gram_regularized(xt, lambda)?;
    let r = cholesky(&gram)?;
    let mut rhs = xt.transpose_matmul(&ystar)?;
    if lambda > 0.0 {
        let l2 = lambda * lambda;
        let data: Vec<f64> = rhs
            .data()
            .iter()
            .zip(w.data())
            .map(|(&a, &b)| a + l2 * b)
            .collect();
        rhs = DenseMatrix::from_parts(rhs.rows(), rhs.cols(), data);
    }
    Ok(StackedSystem { r, rhs })
}

/// Reduces a layer to one BILS problem per weight column.
///
/// For column j the relaxed solution solves `RᵀR v = X̃ᵀy*_j + λ²w_j`, then
/// `q̄ = v ⊘ s_j + z_j` and `R̄_j = R·diag(s_j)`.
pub fn assemble_columns(
    xt: &DenseMatrix,
    x: &DenseMatrix,
    w: &DenseMatrix,
    grid: &QuantGrid,
    cfg: &JtaConfig,
) -> Result<Vec<BilsColumnProblem>> {
    cfg.validate()?;
    let (m, n) = (w.rows(), w.cols());
    if xt.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "X̃ has {} columns but W has {} rows",
            xt.cols(),
            m
        )));
    }
    if grid.rows() != m || grid.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "grid {}x{} vs W {}x{}",
            grid.rows(),
            grid.cols(),
            m,
            n
        )));
    }
    let system = build_stacked_system(xt, x, w, cfg.mu, cfg.lambda)?;
    let box_hi = grid.box_hi();

    let mut problems = Vec::with_capacity(n);
    for j in 0..n {
        let b = system.rhs.column(j);
        let u = solve_lower(&system.r, &b)?;
        let v = solve_upper(&system.r, &u)?;
        let s = grid.scale_column(j);
        let z = grid.zero_point_column(j);
        let qbar: Vec<f64> = v
            .iter()
            .zip(s.iter().zip(z.iter()))
            .map(|(&vi, (&si, &zi))| vi / si + zi)
            .collect();
        let rbar = system.r.scale_columns(&s)?;
        problems.push(BilsColumnProblem::new(rbar, qbar, z, box_hi)?);
    }
    Ok(problems)
}

/// Squared decoding residual `‖R̄(q − q̄)‖₂²` of an integer vector.
///
/// Equals `‖R̄(q − z) − R^{−T}Aᵀy‖₂²` because `R̄(q̄ − z)` reproduces the
/// projected target exactly; selections only ever compare candidates within
/// one column, where the relaxed least-squares floor is constant.
pub fn column_residual(prob: &BilsColumnProblem, q: &[i64]) -> Result<f64> {
    let m = prob.dim();
    if q.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "candidate length {} vs dim {}",
            q.len(),
            m
        )));
    }
    for &v in q {
        if v < 0 || v > prob.box_hi {
            return Err(Error::OutOfBox { value: v, box_hi: prob.box_hi });
        }
    }
    let mut total = 0.0;
    for i in 0..m {
        let mut acc = 0.0;
        for j in i..m {
            acc += prob.rbar.get(i, j) * (q[j] as f64 - prob.qbar[j]);
        }
        total += acc * acc;
    }
    Ok(total)
}

/// The layer score `‖X̃Ŵ − Y*‖_F² + λ²‖Ŵ − W‖_F²`.
pub fn jta_score(
    what: &DenseMatrix,
    xt: &DenseMatrix,
    ystar: &DenseMatrix,
    w: &DenseMatrix,
    lambda: f64,
) -> Result<f64> {
    let yhat = xt.matmul(what)?;
    if yhat.rows() != ystar.rows() || yhat.cols() != ystar.cols() {
        return Err(Error::DimensionMismatch(format!(
            "X̃Ŵ {}x{} vs Y* {}x{}",
            yhat.rows(),
            yhat.cols(),
            ystar.rows(),
            ystar.cols()
        )));
    }
    let mut total = yhat.sub(ystar)?.frobenius_norm_sq();
    if lambda != 0.0 {
        total += lambda * lambda * what.sub(w)?.frobenius_norm_sq();
    }
    Ok(total)
}
