use std::fs;
use std::fs::File;
use std::time::Instant;

use bq_core::{model, quantize_chain, synthetic_calibration, LayerSpec};

use crate::fsutil::write_atomic;
use crate::grid::{parse_f64_list, parse_u32_list};
use crate::jsonout::{array, JsonObject};
use crate::{failure_from_core, Failure, SweepArgs, SweepFormat};

struct Row {
    mu: f64,
    lambda: f64,
    k: u32,
    layer: usize,
    babai_residual_sum: f64,
    kbest_residual_sum: f64,
    jta_score: f64,
    end_to_end_error: f64,
    wall_time: f64,
}

pub fn run(args: &SweepArgs) -> Result<(), Failure> {
    let mus = parse_f64_list(&args.mu).map_err(|e| Failure::new(2, format!("error: --mu: {e}")))?;
    let lambdas =
        parse_f64_list(&args.lambda).map_err(|e| Failure::new(2, format!("error: --lambda: {e}")))?;
    let ks = parse_u32_list(&args.k).map_err(|e| Failure::new(2, format!("error: --k: {e}")))?;
    if mus.is_empty() || lambdas.is_empty() || ks.is_empty() {
        return Err(Failure::new(2, "error: empty sweep grid"));
    }

    let mut file = File::open(&args.model)
        .map_err(|e| Failure::io(format_args!("cannot open {}: {e}", args.model.display())))?;
    let layers = model::read_model(&mut file)
        .map_err(|e| Failure::io(format_args!("{}: {e}", args.model.display())))?;
    if layers.is_empty() {
        return Err(Failure::io(format_args!("{}: model has no layers", args.model.display())));
    }

    let mut rows = Vec::new();
    for &mu in &mus {
        for &lambda in &lambdas {
            for &k in &ks {
                run_point(args, &layers, mu, lambda, k, &mut rows)?;
            }
        }
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::io(format_args!("cannot create {}: {e}", args.out.display())))?;
    let (name, payload) = match args.format {
        SweepFormat::Csv => ("sweep.csv", to_csv(&rows)),
        SweepFormat::Json => ("sweep.json", to_json(&rows)),
    };
    let path = args.out.join(name);
    write_atomic(&path, payload.as_bytes())
        .map_err(|e| Failure::io(format_args!("cannot write {}: {e}", path.display())))?;
    println!("swept {} grid points over {} layers -> {}", mus.len() * lambdas.len() * ks.len(), layers.len(), path.display());
    Ok(())
}

fn run_point(
    args: &SweepArgs,
    layers: &[LayerSpec],
    mu: f64,
    lambda: f64,
    k: u32,
    rows: &mut Vec<Row>,
) -> Result<(), Failure> {
    let cfg = args.common.build(Some(mu), Some(lambda), Some(k));
    cfg.validate().map_err(|e| failure_from_core(&e))?;
    let x0 = synthetic_calibration(args.common.calib, layers[0].weight.rows(), cfg.seed);
    let start = Instant::now();
    let chain = quantize_chain(layers, &x0, &cfg).map_err(|e| failure_from_core(&e))?;
    let _total = start.elapsed().as_secs_f64();
    for report in &chain.reports {
        rows.push(Row {
            mu,
            lambda,
            k,
            layer: report.layer_index,
            babai_residual_sum: report.babai_residual_sum,
            kbest_residual_sum: report.kbest_residual_sum,
            jta_score: report.jta_score,
            end_to_end_error: chain.end_to_end_error,
            wall_time: report.wall_time,
        });
    }
    Ok(())
}

fn to_csv(rows: &[Row]) -> String {
    let mut out = String::from(
        "mu,lambda,k,layer,babai_residual_sum,kbest_residual_sum,jta_score,end_to_end_error,wall_time\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.mu,
            r.lambda,
            r.k,
            r.layer,
            r.babai_residual_sum,
            r.kbest_residual_sum,
            r.jta_score,
            r.end_to_end_error,
            r.wall_time
        ));
    }
    out
}

fn to_json(rows: &[Row]) -> String {
    array(
        rows.iter()
            .map(|r| {
                JsonObject::new()
                    .float("mu", r.mu)
                    .float("lambda", r.lambda)
                    .int("k", r.k as u64)
                    .int("layer", r.layer as u64)
                    .float("babai_residual_sum", r.babai_residual_sum)
                    .float("kbest_residual_sum", r.kbest_residual_sum)
                    .float("jta_score", r.jta_score)
                    .float("end_to_end_error", r.end_to_end_error)
                    .float("wall_time", r.wall_time)
                    .finish()
            })
            .collect(),
    )
}
