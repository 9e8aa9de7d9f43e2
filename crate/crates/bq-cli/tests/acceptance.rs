//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test -p bq-cli --test acceptance`
//! (`-- --nocapture` to see the lines as they print).

use std::process::Command;
use std::time::Instant;

use bq_core::instances::{decaying_instance, diagonal_instance, random_instance};
use bq_core::rng::path_stream;
use bq_core::{
    assemble_columns, babai_decode, brute_force_bils, build_target, calibrate_minmax,
    column_residual, compute_alpha, dequantize, jta_score, kbest_decode, kbest_decode_with_params,
    klein_decode, klein_sample_component, model, ppi_kbabai, quantize_chain, solve_rho,
    sphere_decode, synthetic_calibration, Activation, BilsColumnProblem, DenseMatrix, IntMatrix,
    JtaConfig, KleinParams, KleinRule, LayerSpec,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn criterion(name: &str, body: impl FnOnce() -> Result<String, String>) {
    match body() {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(msg) => {
            println!("FAIL  {name}: {msg}");
            panic!("criterion '{name}' failed: {msg}");
        }
    }
}

fn kbest_cfg(k: u32, wbit: u8, seed: u64) -> JtaConfig {
    JtaConfig { k, seed, wbit, block_size: 4, ..JtaConfig::for_wbit(wbit) }
}

/// The pinned desk benchmark: seed 7, three ReLU-chained layers 16->16->16->8,
/// 256 calibration rows, 3-bit grids with the (0.6, 0.6) knobs.
fn pinned_chain() -> (Vec<LayerSpec>, DenseMatrix) {
    let layers = vec![
        LayerSpec::new(synthetic_calibration(16, 16, 701), Activation::Relu),
        LayerSpec::new(synthetic_calibration(16, 16, 702), Activation::Relu),
        LayerSpec::new(synthetic_calibration(16, 8, 703), Activation::None),
    ];
    let x0 = synthetic_calibration(256, 16, 7);
    (layers, x0)
}

fn pinned_cfg(k: u32) -> JtaConfig {
    JtaConfig {
        mu: 0.6,
        lambda: 0.6,
        k,
        wbit: 3,
        group_size: 0,
        block_size: 4,
        seed: 7,
        klein_rule: KleinRule::DiagSquared,
    }
}

#[test]
fn oracle_dominance() {
    criterion("oracle dominance (1000 instances, m in 2..=6, 2-bit)", || {
        let start = Instant::now();
        let total = 1000;
        for i in 0..total {
            let m = 2 + (i % 5);
            let prob = random_instance(90, i as u64, m, 2, 3.0);
            let oracle = brute_force_bils(&prob).map_err(|e| e.to_string())?;
            let babai = babai_decode(&prob);
            let kbest =
                kbest_decode(&prob, &kbest_cfg(5, 2, 90), i).map_err(|e| e.to_string())?;
            if oracle.residual > babai.residual {
                return Err(format!(
                    "instance {i}: oracle {} > babai {}",
                    oracle.residual, babai.residual
                ));
            }
            if oracle.residual > kbest.residual {
                return Err(format!(
                    "instance {i}: oracle {} > kbest {}",
                    oracle.residual, kbest.residual
                ));
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed >= 60.0 {
            return Err(format!("took {elapsed:.1}s, budget is 60s"));
        }
        Ok(format!("{total}/{total} dominated, {elapsed:.1}s"))
    });
}

#[test]
fn diagonal_exactness() {
    criterion("diagonal exactness (200 instances)", || {
        for i in 0..200u64 {
            let m = 2 + (i as usize % 5);
            let mut prob = diagonal_instance(91, i, m, 2);
            // Keep every unclamped round strictly inside the box.
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            for v in prob.qbar.iter_mut() {
                *v = rng.random::<f64>() * prob.box_hi as f64;
            }
            let babai = babai_decode(&prob);
            let oracle = brute_force_bils(&prob).map_err(|e| e.to_string())?;
            if babai.q != oracle.q {
                return Err(format!("instance {i}: babai {:?} != oracle {:?}", babai.q, oracle.q));
            }
        }
        Ok("200/200 exact integer matches".to_string())
    });
}

#[test]
fn kbest_dominance_and_nested_monotonicity() {
    criterion("k-best dominance and nested monotonicity (500 instances)", || {
        for i in 0..500u64 {
            let m = 3 + (i as usize % 4);
            let prob = decaying_instance(92, i, m, 2, 0.45);
            let babai = babai_decode(&prob);
            let kbest =
                kbest_decode(&prob, &kbest_cfg(5, 2, 92), i as usize).map_err(|e| e.to_string())?;
            if kbest.residual > babai.residual {
                return Err(format!("instance {i}: kbest above babai"));
            }
            // Fixed temperature, growing path count: candidate sets nest under
            // the hashed per-path streams, so residuals are non-increasing.
            let params = compute_alpha(25, m, prob.rbar.min_diag()).map_err(|e| e.to_string())?;
            let mut prev = f64::INFINITY;
            for k in [1u32, 2, 5, 10, 25] {
                let cand = kbest_decode_with_params(
                    &prob,
                    &params,
                    KleinRule::DiagSquared,
                    k,
                    92,
                    i as usize,
                );
                if cand.residual > prev {
                    return Err(format!("instance {i}: K={k} residual above smaller K"));
                }
                prev = cand.residual;
            }
        }
        Ok("500/500 dominated and monotone".to_string())
    });
}

#[test]
fn klein_distribution_fidelity() {
    criterion("klein distribution fidelity (chi-square, 20 triples/rule)", || {
        // 0.999 chi-square quantile at 3 degrees of freedom (4-value box).
        const CHI2_CRIT_DOF3: f64 = 16.266;
        let n = 10000;
        let box_hi = 3i64;
        let mut rng = ChaCha8Rng::seed_from_u64(93);
        for rule in [KleinRule::DiagSquared, KleinRule::DiagLinear] {
            for t in 0..20 {
                let c = rng.random::<f64>() * 4.0 - 0.5;
                let r = 0.3 + rng.random::<f64>() * 1.5;
                let alpha = 0.1 + rng.random::<f64>() * 1.9;
                let g = match rule {
                    KleinRule::DiagSquared => r * r,
                    KleinRule::DiagLinear => r,
                };
                let weights: Vec<f64> = (0..=box_hi)
                    .map(|v| (-alpha * g * (c - v as f64) * (c - v as f64)).exp())
                    .collect();
                let total: f64 = weights.iter().sum();
                let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();

                let mut draw_rng = path_stream(93, t as u64, 1);
                let mut counts = [0u32; 4];
                for _ in 0..n {
                    let v = klein_sample_component(c, r, alpha, box_hi, rule, &mut draw_rng);
                    counts[v as usize] += 1;
                }
                let chi2: f64 = probs
                    .iter()
                    .zip(&counts)
                    .map(|(&p, &obs)| {
                        let expect = n as f64 * p;
                        (obs as f64 - expect) * (obs as f64 - expect) / expect
                    })
                    .sum();
                if chi2 > CHI2_CRIT_DOF3 {
                    return Err(format!(
                        "rule {rule:?} triple {t} (c={c:.3}, r={r:.3}, alpha={alpha:.3}): chi2 {chi2:.2} > {CHI2_CRIT_DOF3}"
                    ));
                }
            }
        }
        Ok("40 triples within the 0.999 chi-square bound".to_string())
    });
}

#[test]
fn alpha_rule() {
    criterion("alpha rule (root accuracy and K=1 greedy equivalence)", || {
        for &k in &[2u32, 5, 25] {
            for &m in &[4usize, 16, 64] {
                let rho = solve_rho(k, m).map_err(|e| e.to_string())?;
                let back = ((2.0 * m as f64 / rho) * (1.0 + rho.ln())).exp();
                if (back - k as f64).abs() > 1e-9 * k as f64 {
                    return Err(format!("K={k}, m={m}: (e*rho)^(2m/rho) = {back}"));
                }
            }
        }
        for i in 0..100u64 {
            let prob = random_instance(94, i, 5, 2, 2.0);
            let kb = kbest_decode(&prob, &kbest_cfg(1, 2, 94), i as usize)
                .map_err(|e| e.to_string())?;
            let babai = babai_decode(&prob);
            if kb.q != babai.q {
                return Err(format!("instance {i}: K=1 diverged from Babai"));
            }
            let mut stream = path_stream(94, i, 1);
            let greedy_sample =
                klein_decode(&prob, &KleinParams::GREEDY, KleinRule::DiagSquared, &mut stream);
            if greedy_sample.q != babai.q {
                return Err(format!("instance {i}: alpha=inf sampler diverged from Babai"));
            }
        }
        Ok("9 roots within 1e-9 K; 100/100 greedy equivalences".to_string())
    });
}

#[test]
fn ppi_kbabai_equivalence() {
    criterion("ppi-kbabai equivalence (100 systems, p=32 m=8 n=5 K=3)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(95);
        for sys in 0..100 {
            let xt = synthetic_calibration(32, 8, 9500 + sys);
            let w = synthetic_calibration(8, 5, 9600 + sys);
            let x = {
                let noise = synthetic_calibration(32, 8, 9700 + sys);
                let data: Vec<f64> = xt
                    .data()
                    .iter()
                    .zip(noise.data())
                    .map(|(&a, &b)| a + 0.1 * b)
                    .collect();
                DenseMatrix::new(32, 8, data).unwrap()
            };
            let wbit = 2 + (rng.random::<u32>() % 2) as u8;
            let grid = calibrate_minmax(&w, wbit, 0).map_err(|e| e.to_string())?;
            let base = JtaConfig {
                mu: 0.6,
                lambda: 0.6,
                k: 3,
                wbit,
                group_size: 0,
                block_size: 8,
                seed: sys,
                klein_rule: KleinRule::DiagSquared,
            };
            let probs = assemble_columns(&xt, &x, &w, &grid, &base).map_err(|e| e.to_string())?;

            let reference = ppi_kbabai(&probs, &JtaConfig { block_size: 8, ..base.clone() })
                .map_err(|e| e.to_string())?;
            // Per-column K-best must agree bit for bit.
            for (j, prob) in probs.iter().enumerate() {
                let kb = kbest_decode(prob, &base, j).map_err(|e| e.to_string())?;
                if kb.q != reference[j].best.q {
                    return Err(format!("system {sys} column {j}: ppi vs kbest integers differ"));
                }
            }
            // Block sizes 1, 2 and m must agree bit for bit.
            for b in [1usize, 2] {
                let out = ppi_kbabai(&probs, &JtaConfig { block_size: b, ..base.clone() })
                    .map_err(|e| e.to_string())?;
                for (j, (x_ref, x_b)) in reference.iter().zip(&out).enumerate() {
                    if x_ref.best.q != x_b.best.q {
                        return Err(format!("system {sys} column {j}: B=8 vs B={b} differ"));
                    }
                }
            }
        }
        Ok("100/100 systems bit-identical across decoders and block sizes".to_string())
    });
}

#[test]
fn objective_decomposition() {
    criterion("objective decomposition (50 systems, 1e-8 relative)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(96);
        for sys in 0..50 {
            let (p, m, n) = (6, 5, 4);
            let xt = synthetic_calibration(p, m, 9000 + sys);
            let x = synthetic_calibration(p, m, 9100 + sys);
            let w = synthetic_calibration(m, n, 9200 + sys);
            let grid = calibrate_minmax(&w, 2, 0).map_err(|e| e.to_string())?;
            let cfg = JtaConfig { mu: 0.6, lambda: 0.6, seed: sys, ..JtaConfig::for_wbit(2) };
            let probs = assemble_columns(&xt, &x, &w, &grid, &cfg).map_err(|e| e.to_string())?;
            let ystar = build_target(&x, &xt, &w, cfg.mu).map_err(|e| e.to_string())?;

            let mut draw = |rng: &mut ChaCha8Rng| {
                let data: Vec<i64> =
                    (0..m * n).map(|_| (rng.random::<u32>() % 4) as i64).collect();
                IntMatrix::new(m, n, data).unwrap()
            };
            let qa = draw(&mut rng);
            let qb = draw(&mut rng);
            let score = |q: &IntMatrix| -> Result<f64, String> {
                let what = dequantize(q, &grid).map_err(|e| e.to_string())?;
                jta_score(&what, &xt, &ystar, &w, cfg.lambda).map_err(|e| e.to_string())
            };
            let resid = |q: &IntMatrix| -> Result<f64, String> {
                (0..n)
                    .map(|j| column_residual(&probs[j], &q.column(j)).map_err(|e| e.to_string()))
                    .sum()
            };
            let d_score = score(&qa)? - score(&qb)?;
            let d_resid = resid(&qa)? - resid(&qb)?;
            let denom = d_score.abs().max(d_resid.abs()).max(1.0);
            if (d_score - d_resid).abs() > 1e-8 * denom {
                return Err(format!(
                    "system {sys}: delta-score {d_score} vs delta-residuals {d_resid}"
                ));
            }
        }
        Ok("50/50 systems decompose".to_string())
    });
}

#[test]
fn config_reductions() {
    criterion("config reductions to plain objectives (0 ulp, 20 systems)", || {
        for sys in 0..20u64 {
            let (p, m, n) = (7, 5, 4);
            let xt = synthetic_calibration(p, m, 9300 + sys);
            let x = synthetic_calibration(p, m, 9400 + sys);
            let w = synthetic_calibration(m, n, 9500 + sys);
            let what = synthetic_calibration(m, n, 9600 + sys);

            let ystar1 = build_target(&x, &xt, &w, 1.0).map_err(|e| e.to_string())?;
            let s1 = jta_score(&what, &xt, &ystar1, &w, 0.0).map_err(|e| e.to_string())?;
            let rt = xt
                .matmul(&what)
                .and_then(|yh| yh.sub(&xt.matmul(&w)?))
                .map_err(|e| e.to_string())?
                .frobenius_norm_sq();
            if s1.to_bits() != rt.to_bits() {
                return Err(format!("system {sys}: runtime-consistent reduction off by ulps"));
            }

            let ystar0 = build_target(&x, &xt, &w, 0.0).map_err(|e| e.to_string())?;
            let s0 = jta_score(&what, &xt, &ystar0, &w, 0.0).map_err(|e| e.to_string())?;
            let mismatch = xt
                .matmul(&what)
                .and_then(|yh| yh.sub(&x.matmul(&w)?))
                .map_err(|e| e.to_string())?
                .frobenius_norm_sq();
            if s0.to_bits() != mismatch.to_bits() {
                return Err(format!("system {sys}: mismatch reduction off by ulps"));
            }
        }
        Ok("20/20 systems reduce to 0 ulp".to_string())
    });
}

#[test]
fn residual_vs_k_trend() {
    criterion("residual-vs-K trend on the pinned benchmark (golden)", || {
        let (layers, x0) = pinned_chain();
        let ks = [1u32, 5, 25, 50];
        let mut mean_kbest = Vec::new();
        let mut per_layer = Vec::new();
        let mut e2e = Vec::new();
        for &k in &ks {
            let chain = quantize_chain(&layers, &x0, &pinned_cfg(k)).map_err(|e| e.to_string())?;
            let sums: Vec<f64> = chain.reports.iter().map(|r| r.kbest_residual_sum).collect();
            mean_kbest.push(sums.iter().sum::<f64>() / sums.len() as f64);
            per_layer.push(sums);
            e2e.push(chain.end_to_end_error);
        }
        for pair in mean_kbest.windows(2) {
            if pair[1] > pair[0] {
                return Err(format!("mean residual increased along K: {mean_kbest:?}"));
            }
        }
        if !(mean_kbest[1] < mean_kbest[0]) {
            return Err(format!(
                "K=1 -> K=5 improvement not strictly positive: {} vs {}",
                mean_kbest[0], mean_kbest[1]
            ));
        }

        let golden_path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden/ktrend_seed7.json");
        let actual = serde_json::json!({
            "k_values": ks,
            "mean_kbest_residual": mean_kbest,
            "per_layer_kbest_residual": per_layer,
            "end_to_end_error": e2e,
        });
        if std::env::var("BQ_BLESS").is_ok() {
            std::fs::write(&golden_path, serde_json::to_string_pretty(&actual).unwrap())
                .map_err(|e| e.to_string())?;
            return Ok(format!("golden blessed: {}", golden_path.display()));
        }
        let golden: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(&golden_path)
                .map_err(|e| format!("missing golden file ({e}); run with BQ_BLESS=1"))?,
        )
        .map_err(|e| e.to_string())?;
        if golden != actual {
            return Err(format!("pinned values drifted from golden:\n{actual}"));
        }
        Ok(format!("monotone over K={ks:?}, matches golden exactly"))
    });
}

#[test]
fn runtime_overhead() {
    criterion("runtime overhead K=25 vs K=1 (<= 2.0x)", || {
        let (layers, x0) = pinned_chain();
        let time_of = |k: u32| -> Result<f64, String> {
            let mut best = f64::INFINITY;
            for _ in 0..3 {
                let start = Instant::now();
                let _ = quantize_chain(&layers, &x0, &pinned_cfg(k)).map_err(|e| e.to_string())?;
                best = best.min(start.elapsed().as_secs_f64());
            }
            Ok(best)
        };
        let t1 = time_of(1)?;
        let t25 = time_of(25)?;
        let ratio = t25 / t1;
        let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        if threads < 4 {
            return Ok(format!(
                "informational on {threads} hardware threads: ratio {ratio:.2}x (K=1 {t1:.4}s, K=25 {t25:.4}s)"
            ));
        }
        if ratio > 2.0 {
            return Err(format!("ratio {ratio:.2}x exceeds 2.0x (K=1 {t1:.4}s, K=25 {t25:.4}s)"));
        }
        Ok(format!("ratio {ratio:.2}x on {threads} threads"))
    });
}

#[test]
fn cli_determinism() {
    criterion("byte-identical quantized models across runs", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let model_path = dir.path().join("chain.bqm");
        let (layers, _) = pinned_chain();
        let mut bytes = Vec::new();
        model::write_model(&mut bytes, &layers).map_err(|e| e.to_string())?;
        std::fs::write(&model_path, &bytes).map_err(|e| e.to_string())?;

        let mut outputs = Vec::new();
        for run in 0..2 {
            let out_dir = dir.path().join(format!("out{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_bq"))
                .args([
                    "quantize",
                    "--model",
                    model_path.to_str().unwrap(),
                    "--out",
                    out_dir.to_str().unwrap(),
                    "--calib",
                    "64",
                    "--wbit",
                    "3",
                    "--mu",
                    "0.6",
                    "--lambda",
                    "0.6",
                    "--k",
                    "5",
                    "--seed",
                    "7",
                ])
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("run {run} exited with {status}"));
            }
            outputs.push(
                std::fs::read(out_dir.join("chain.q.bqm")).map_err(|e| e.to_string())?,
            );
        }
        if outputs[0] != outputs[1] {
            return Err("quantized model bytes differ between identical runs".to_string());
        }
        Ok(format!("{} bytes, identical across runs", outputs[0].len()))
    });
}
