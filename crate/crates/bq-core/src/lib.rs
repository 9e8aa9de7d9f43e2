//! Lattice-decoding weight quantization.
//!
//! Layer-wise post-training quantization posed as per-column box-constrained
//! integer least squares: calibrate a scale/zero-point grid, reduce the layer
//! objective to one triangular integer problem per weight column, and decode
//! each column with deterministic Babai rounding plus K Klein-randomized
//! paths, keeping the best candidate under the joint target-alignment score.
//! Exact enumeration oracles validate every sub-optimal decoder at small
//! dimensions.

pub mod decoder;
pub mod error;
pub mod instances;
pub mod matlin;
pub mod model;
pub mod objective;
pub mod oracle;
pub mod parallel;
pub mod pipeline;
pub mod quantgrid;
pub mod rng;

pub use decoder::{
    babai_decode, compute_alpha, kbest_decode, kbest_decode_with_params, klein_decode,
    klein_sample_component, solve_rho, Candidate, KleinParams, KleinRule,
};
pub use error::{Error, Result};
pub use matlin::{cholesky, gram_regularized, solve_lower, solve_upper, DenseMatrix, UpperTriangular};
pub use objective::{
    assemble_columns, build_stacked_system, build_target, column_residual, jta_score,
    BilsColumnProblem, JtaConfig, StackedSystem,
};
pub use oracle::{brute_force_bils, sphere_decode, sphere_decode_with_stats, SphereStats};
pub use parallel::{ppi_kbabai, ppi_kbabai_with_buffers, ColumnDecode, PathBuffers};
pub use pipeline::{
    quantize_chain, quantize_layer, synthetic_calibration, Activation, ChainResult, LayerReport,
    LayerSpec, QuantizedLayer,
};
pub use quantgrid::{
    calibrate_minmax, dequantize, nearest_grid_point, rtn_quantize, IntMatrix, QuantGrid,
};
