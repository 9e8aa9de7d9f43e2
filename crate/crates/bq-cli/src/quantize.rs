use std::fs;
use std::fs::File;
use std::time::Instant;

use bq_core::{model, quantize_chain, synthetic_calibration};

use crate::fsutil::write_atomic;
use crate::report::report_json;
use crate::{failure_from_core, Failure, QuantizeArgs};

pub fn run(args: &QuantizeArgs) -> Result<(), Failure> {
    let cfg = args.common.build(args.mu, args.lambda, args.k);
    cfg.validate().map_err(|e| failure_from_core(&e))?;
    if args.common.calib == 0 {
        return Err(Failure::new(2, "error: --calib must be at least 1"));
    }

    let mut file = File::open(&args.model)
        .map_err(|e| Failure::io(format_args!("cannot open {}: {e}", args.model.display())))?;
    let layers = model::read_model(&mut file)
        .map_err(|e| Failure::io(format_args!("{}: {e}", args.model.display())))?;
    if layers.is_empty() {
        return Err(Failure::io(format_args!("{}: model has no layers", args.model.display())));
    }

    let start = Instant::now();
    let x0 = synthetic_calibration(args.common.calib, layers[0].weight.rows(), cfg.seed);
    let chain = quantize_chain(&layers, &x0, &cfg).map_err(|e| failure_from_core(&e))?;
    let total_wall_time = start.elapsed().as_secs_f64();

    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::io(format_args!("cannot create {}: {e}", args.out.display())))?;

    let stem = args
        .model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());
    let model_path = args.out.join(format!("{stem}.q.bqm"));
    let mut bytes = Vec::new();
    model::write_quantized(&mut bytes, &chain.layers).map_err(|e| failure_from_core(&e))?;
    write_atomic(&model_path, &bytes)
        .map_err(|e| Failure::io(format_args!("cannot write {}: {e}", model_path.display())))?;

    let report_path = args.out.join("report.json");
    let json = report_json(&cfg, args.common.calib, &chain, total_wall_time);
    write_atomic(&report_path, json.as_bytes())
        .map_err(|e| Failure::io(format_args!("cannot write {}: {e}", report_path.display())))?;

    println!(
        "quantized {} layers at {} bits -> {} (end-to-end error {:.3e})",
        chain.layers.len(),
        cfg.wbit,
        model_path.display(),
        chain.end_to_end_error
    );
    Ok(())
}
