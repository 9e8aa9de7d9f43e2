//! Layer-wise quantization of a chain of linear layers with runtime
//! activation propagation.
//!
//! Calibration activations flow through the chain twice: `X` through the
//! original full-precision weights and `X̃` through the already-quantized
//! prefix. Layer i is quantized against the pair `(X_i, X̃_i)`, then both
//! streams advance. Layers are strictly sequential; columns and paths inside
//! a layer decode in parallel.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matlin::DenseMatrix;
use crate::objective::{assemble_columns, build_target, jta_score, JtaConfig};
use crate::parallel::ppi_kbabai;
use crate::quantgrid::{calibrate_minmax, dequantize, IntMatrix, QuantGrid};
use crate::rng::path_stream;

/// Elementwise nonlinearity applied after the matrix product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
}

impl Activation {
    pub fn apply(&self, x: &DenseMatrix) -> DenseMatrix {
        match self {
            Activation::None => x.clone(),
            Activation::Relu => {
                let data = x.data().iter().map(|&v| v.max(0.0)).collect();
                DenseMatrix::from_parts(x.rows(), x.cols(), data)
            }
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            Activation::None => 0,
            Activation::Relu => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::None),
            1 => Ok(Activation::Relu),
            other => Err(Error::InvalidParameter(format!("unknown activation tag {other}"))),
        }
    }
}

/// One linear layer: weights plus the nonlinearity that follows it.
#[derive(Debug, Clone)]
pub struct LayerSpec {
    pub weight: DenseMatrix,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(weight: DenseMatrix, activation: Activation) -> Self {
        Self { weight, activation }
    }
}

/// Per-layer diagnostics emitted by the quantizer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    pub layer_index: usize,
    /// ‖X̃ · W‖_F, the layer output norm under runtime activations.
    pub output_norm: f64,
    /// Sum over columns of the greedy path's residual.
    pub babai_residual_sum: f64,
    /// Sum over columns of the best candidate's residual.
    pub kbest_residual_sum: f64,
    /// The layer score of the returned dequantized weights.
    pub jta_score: f64,
    /// Fraction of columns where a randomized path beat the greedy one.
    pub improvement_fraction: f64,
    /// Seconds spent quantizing the layer.
    pub wall_time: f64,
}

/// A quantized layer: integers, grid, and the carried-over activation.
#[derive(Debug, Clone)]
pub struct QuantizedLayer {
    pub q: IntMatrix,
    pub grid: QuantGrid,
    pub activation: Activation,
}

impl QuantizedLayer {
    pub fn dequantize(&self) -> Result<DenseMatrix> {
        dequantize(&self.q, &self.grid)
    }
}

/// Full-chain outcome: quantized layers, per-layer reports, and the relative
/// end-to-end output error.
#[derive(Debug, Clone)]
pub struct ChainResult {
    pub layers: Vec<QuantizedLayer>,
    pub reports: Vec<LayerReport>,
    pub end_to_end_error: f64,
}

/// Seeded standard-normal calibration activations.
pub fn synthetic_calibration(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    // Stream index far outside the (column, path) range used by decoding.
    let mut rng = path_stream(seed, u64::MAX, u64::MAX);
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_parts(rows, cols, data)
}

fn quantize_layer_indexed(
    layer: &LayerSpec,
    x: &DenseMatrix,
    xt: &DenseMatrix,
    cfg: &JtaConfig,
    layer_index: usize,
) -> Result<(IntMatrix, QuantGrid, LayerReport)> {
    let start = Instant::now();
    let w = &layer.weight;
    if x.cols() != w.rows() || xt.cols() != w.rows() || x.rows() != xt.rows() {
        return Err(Error::DimensionMismatch(format!(
            "activations {}x{} / {}x{} vs weight {}x{}",
            x.rows(),
            x.cols(),
            xt.rows(),
            xt.cols(),
            w.rows(),
            w.cols()
        )));
    }

    let grid = calibrate_minmax(w, cfg.wbit, cfg.group_size)?;
    let probs = assemble_columns(xt, x, w, &grid, cfg)?;
    let decodes = ppi_kbabai(&probs, cfg)?;

    let n = w.cols();
    let mut q = IntMatrix::zeros(w.rows(), n);
    let mut babai_sum = 0.0;
    let mut kbest_sum = 0.0;
    let mut improved = 0usize;
    for (j, decode) in decodes.iter().enumerate() {
        q.set_column(j, &decode.best.q);
        babai_sum += decode.greedy.residual;
        kbest_sum += decode.best.residual;
        if decode.best.residual < decode.greedy.residual {
            improved += 1;
        }
    }

    let what = dequantize(&q, &grid)?;
    let ystar = build_target(x, xt, w, cfg.mu)?;
    let score = jta_score(&what, xt, &ystar, w, cfg.lambda)?;
    let output_norm = xt.matmul(w)?.frobenius_norm();

    let report = LayerReport {
        layer_index,
        output_norm,
        babai_residual_sum: babai_sum,
        kbest_residual_sum: kbest_sum,
        jta_score: score,
        improvement_fraction: improved as f64 / n as f64,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((q, grid, report))
}

/// Quantizes one layer given full-precision and runtime activations.
pub fn quantize_layer(
    layer: &LayerSpec,
    x: &DenseMatrix,
    xt: &DenseMatrix,
    cfg: &JtaConfig,
) -> Result<(IntMatrix, QuantGrid, LayerReport)> {
    quantize_layer_indexed(layer, x, xt, cfg, 0)
}

/// Quantizes a chain layer by layer.
///
/// The full-precision stream propagates through the original weights; the
/// runtime stream through the dequantized weights of the already-quantized
/// prefix. The end-to-end error is the relative Frobenius gap between the two
/// final outputs.
pub fn quantize_chain(
    layers: &[LayerSpec],
    x0: &DenseMatrix,
    cfg: &JtaConfig,
) -> Result<ChainResult> {
    cfg.validate()?;
    let mut x_fp = x0.clone();
    let mut x_rt = x0.clone();
    let mut quantized = Vec::with_capacity(layers.len());
    let mut reports = Vec::with_capacity(layers.len());

    for (i, layer) in layers.iter().enumerate() {
        if x_fp.cols() != layer.weight.rows() {
            return Err(Error::DimensionMismatch(format!(
                "layer {} expects {} input features, got {}",
                i,
                layer.weight.rows(),
                x_fp.cols()
            )));
        }
        let (q, grid, report) = quantize_layer_indexed(layer, &x_fp, &x_rt, cfg, i)
            .map_err(|e| Error::AtLayer { index: i, source: Box::new(e) })?;
        let what = dequantize(&q, &grid)?;
        x_fp = layer.activation.apply(&x_fp.matmul(&layer.weight)?);
        x_rt = layer.activation.apply(&x_rt.matmul(&what)?);
        quantized.push(QuantizedLayer { q, grid, activation: layer.activation });
        reports.push(report);
    }

    let gap = x_fp.sub(&x_rt)?.frobenius_norm();
    let denom = x_fp.frobenius_norm();
    let end_to_end_error = if denom > 0.0 { gap / denom } else { gap };
    Ok(ChainResult { layers: quantized, reports, end_to_end_error })
}
