//! Decoder-versus-oracle verification: seeded random instances, one pass/fail
//! line per invariant, nonzero exit on any violation.

use bq_core::instances::{decaying_instance, diagonal_instance, random_instance};
use bq_core::rng::path_stream;
use bq_core::{
    babai_decode, brute_force_bils, compute_alpha, kbest_decode, kbest_decode_with_params,
    klein_decode, ppi_kbabai, sphere_decode, BilsColumnProblem, Candidate, JtaConfig, KleinParams,
    KleinRule,
};

use crate::{Failure, VerifyArgs};

struct CheckResult {
    name: &'static str,
    passed: usize,
    total: usize,
    first_failure: Option<String>,
}

impl CheckResult {
    fn ok(&self) -> bool {
        self.first_failure.is_none()
    }
}

fn run_check(
    name: &'static str,
    total: usize,
    mut check: impl FnMut(usize) -> Result<(), String>,
) -> CheckResult {
    let mut passed = 0;
    let mut first_failure = None;
    for i in 0..total {
        match check(i) {
            Ok(()) => passed += 1,
            Err(msg) => {
                if first_failure.is_none() {
                    first_failure = Some(format!("instance {i}: {msg}"));
                }
            }
        }
    }
    CheckResult { name, passed, total, first_failure }
}

fn cfg_for(args: &VerifyArgs, k: u32, block_size: usize) -> JtaConfig {
    JtaConfig {
        k,
        block_size,
        seed: args.seed,
        wbit: args.wbit,
        ..JtaConfig::for_wbit(args.wbit)
    }
}

/// Per-column K-best reference built path by path, so a fault can misalign
/// the streams on purpose.
fn reference_kbest(
    prob: &BilsColumnProblem,
    params: &KleinParams,
    k: u32,
    seed: u64,
    column: usize,
    path_offset: u64,
) -> Candidate {
    let mut best = babai_decode(prob);
    for path in 1..=k as u64 {
        let mut rng = path_stream(seed, column as u64, path + path_offset);
        let cand = klein_decode(prob, params, KleinRule::DiagSquared, &mut rng);
        if cand.residual < best.residual {
            best = cand;
        }
    }
    best
}

pub fn run(args: &VerifyArgs) -> Result<(), Failure> {
    if args.m == 0 || args.m > 16 {
        return Err(Failure::new(2, "error: --m must be in 1..=16"));
    }
    if !(2..=8).contains(&args.wbit) {
        return Err(Failure::new(2, "error: --wbit must be in 2..=8"));
    }
    // (box_hi+1)^m = 2^(wbit·m); brute force only below 2^16 points.
    let enumerable = (args.wbit as usize) * args.m <= 16;
    let seed = args.seed;
    let n = args.instances;
    let (m, wbit) = (args.m, args.wbit);

    let mut results = Vec::new();

    // Oracle dominance: the exact optimum never exceeds any decoder.
    results.push(run_check("oracle-dominance", n, |i| {
        let prob = random_instance(seed, i as u64, m, wbit, 3.0);
        let oracle = if enumerable {
            let bf = brute_force_bils(&prob).map_err(|e| e.to_string())?;
            let sd = sphere_decode(&prob, None);
            if bf.q != sd.q {
                return Err(format!("oracles disagree: {:?} vs {:?}", bf.q, sd.q));
            }
            bf
        } else {
            sphere_decode(&prob, None)
        };
        let babai = babai_decode(&prob);
        let kb = kbest_decode(&prob, &cfg_for(args, 5, 2), i).map_err(|e| e.to_string())?;
        if oracle.residual > babai.residual {
            return Err(format!("oracle {} > babai {}", oracle.residual, babai.residual));
        }
        if oracle.residual > kb.residual {
            return Err(format!("oracle {} > kbest {}", oracle.residual, kb.residual));
        }
        Ok(())
    }));

    // Diagonal exactness: greedy rounding is optimal on separable problems.
    results.push(run_check("diagonal-exactness", n, |i| {
        let prob = diagonal_instance(seed, i as u64, m, wbit);
        let babai = babai_decode(&prob);
        let oracle = sphere_decode(&prob, None);
        if babai.q != oracle.q {
            return Err(format!("babai {:?} vs oracle {:?}", babai.q, oracle.q));
        }
        Ok(())
    }));

    // K-best dominance over the greedy path.
    results.push(run_check("kbest-dominance", n, |i| {
        let prob = decaying_instance(seed, i as u64, m, wbit, 0.5);
        let babai = babai_decode(&prob);
        let kb = kbest_decode(&prob, &cfg_for(args, 5, 2), i).map_err(|e| e.to_string())?;
        if kb.residual > babai.residual {
            return Err(format!("kbest {} > babai {}", kb.residual, babai.residual));
        }
        Ok(())
    }));

    // Nested monotonicity at a fixed temperature.
    results.push(run_check("nested-monotonicity", n, |i| {
        let prob = decaying_instance(seed, i as u64, m, wbit, 0.4);
        let params = compute_alpha(25, m, prob.rbar.min_diag()).map_err(|e| e.to_string())?;
        let mut prev = f64::INFINITY;
        for k in [1u32, 5, 10, 25] {
            let cand =
                kbest_decode_with_params(&prob, &params, KleinRule::DiagSquared, k, seed, i);
            if cand.residual > prev {
                return Err(format!("K={k} residual {} above smaller-K {}", cand.residual, prev));
            }
            prev = cand.residual;
        }
        Ok(())
    }));

    // Batched decode equals per-column K-best and includes the greedy path.
    let fault_offset = if args.inject_fault { 1 } else { 0 };
    let groups = n.div_ceil(4).max(1);
    results.push(run_check("ppi-kbest-equivalence", groups, |g| {
        let probs: Vec<BilsColumnProblem> = (0..4)
            .map(|c| decaying_instance(seed, (g * 4 + c) as u64, m, wbit, 0.45))
            .collect();
        let cfg = cfg_for(args, 3, 2);
        let out = ppi_kbabai(&probs, &cfg).map_err(|e| e.to_string())?;
        for (j, (prob, decode)) in probs.iter().zip(&out).enumerate() {
            let params = compute_alpha(cfg.k, m, prob.rbar.min_diag()).map_err(|e| e.to_string())?;
            let reference = reference_kbest(prob, &params, cfg.k, cfg.seed, j, fault_offset);
            if reference.q != decode.best.q {
                return Err(format!(
                    "column {j}: batched {:?} vs reference {:?}",
                    decode.best.q, reference.q
                ));
            }
            let babai = babai_decode(prob);
            if decode.greedy.q != babai.q {
                return Err(format!("column {j}: greedy path diverged from Babai"));
            }
        }
        Ok(())
    }));

    // Integer outputs are invariant to the block size.
    results.push(run_check("block-invariance", groups, |g| {
        let probs: Vec<BilsColumnProblem> = (0..4)
            .map(|c| random_instance(seed, (g * 4 + c) as u64, m, wbit, 2.0))
            .collect();
        let reference = ppi_kbabai(&probs, &cfg_for(args, 3, m)).map_err(|e| e.to_string())?;
        for b in [1usize, 2] {
            let out = ppi_kbabai(&probs, &cfg_for(args, 3, b)).map_err(|e| e.to_string())?;
            for (j, (x, y)) in reference.iter().zip(&out).enumerate() {
                if x.best.q != y.best.q {
                    return Err(format!("column {j}: B={m} vs B={b} differ"));
                }
            }
        }
        Ok(())
    }));

    // Greedy limit: the infinite-temperature sampler is exactly Babai.
    results.push(run_check("greedy-limit", n, |i| {
        let prob = random_instance(seed, i as u64, m, wbit, 2.5);
        let mut rng = path_stream(seed, i as u64, 1);
        let klein = klein_decode(&prob, &KleinParams::GREEDY, KleinRule::DiagSquared, &mut rng);
        let babai = babai_decode(&prob);
        if klein.q != babai.q {
            return Err("greedy-limit sample diverged from Babai".to_string());
        }
        Ok(())
    }));

    let mut all_ok = true;
    println!("{:<6} {:<24} {:>12}", "STATUS", "INVARIANT", "INSTANCES");
    for r in &results {
        let status = if r.ok() { "PASS" } else { "FAIL" };
        println!("{:<6} {:<24} {:>7}/{:<5}", status, r.name, r.passed, r.total);
        if let Some(msg) = &r.first_failure {
            println!("       first violation: {msg} (seed {seed})");
            all_ok = false;
        }
    }
    if all_ok {
        Ok(())
    } else {
        Err(Failure::new(1, format!("verification failed (seed {seed})")))
    }
}
