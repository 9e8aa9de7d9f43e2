//! The report.json document: stable keys, 17-significant-digit numbers.

use bq_core::{ChainResult, JtaConfig, KleinRule, LayerReport};

use crate::jsonout::{array, JsonObject};

pub fn config_json(cfg: &JtaConfig, calib_rows: usize) -> String {
    JsonObject::new()
        .float("mu", cfg.mu)
        .float("lambda", cfg.lambda)
        .int("k", cfg.k as u64)
        .int("wbit", cfg.wbit as u64)
        .int("group_size", cfg.group_size as u64)
        .int("block_size", cfg.block_size as u64)
        .int("seed", cfg.seed)
        .string(
            "klein_rule",
            match cfg.klein_rule {
                KleinRule::DiagSquared => "squared",
                KleinRule::DiagLinear => "linear",
            },
        )
        .int("calib_rows", calib_rows as u64)
        .finish()
}

pub fn layer_json(report: &LayerReport) -> String {
    JsonObject::new()
        .int("layer_index", report.layer_index as u64)
        .float("output_norm", report.output_norm)
        .float("babai_residual_sum", report.babai_residual_sum)
        .float("kbest_residual_sum", report.kbest_residual_sum)
        .float("jta_score", report.jta_score)
        .float("improvement_fraction", report.improvement_fraction)
        .float("wall_time", report.wall_time)
        .finish()
}

pub fn report_json(cfg: &JtaConfig, calib_rows: usize, chain: &ChainResult, total_wall_time: f64) -> String {
    let layers = array(chain.reports.iter().map(layer_json).collect());
    JsonObject::new()
        .raw("config", config_json(cfg, calib_rows))
        .raw("layers", layers)
        .float("end_to_end_error", chain.end_to_end_error)
        .float("total_wall_time", total_wall_time)
        .finish()
}
