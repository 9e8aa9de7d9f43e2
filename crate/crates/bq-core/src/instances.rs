//! Seeded random problem instances shared by the verification command, the
//! acceptance suite, and benchmarks, so every consumer exercises the same
//! distributions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::matlin::UpperTriangular;
use crate::objective::BilsColumnProblem;
use crate::rng::path_stream;

/// Random upper-triangular factor with diagonal entries spread over
/// `10^±(diag_log10_spread/2)` and dense off-diagonal part in (−1, 1).
pub fn random_upper_triangular(
    rng: &mut ChaCha8Rng,
    m: usize,
    diag_log10_spread: f64,
) -> UpperTriangular {
    let mut data = vec![0.0; m * m];
    for i in 0..m {
        let e = (rng.random::<f64>() - 0.5) * diag_log10_spread;
        data[i * m + i] = 10f64.powf(e);
        for j in (i + 1)..m {
            data[i * m + j] = rng.random::<f64>() * 2.0 - 1.0;
        }
    }
    UpperTriangular::new(m, data).expect("generated factor is valid")
}

/// Factor whose diagonal decays by a fixed ratio per row; with a dense upper
/// part this is the classic hard regime for greedy decoding.
pub fn decaying_upper_triangular(
    rng: &mut ChaCha8Rng,
    m: usize,
    decay: f64,
) -> UpperTriangular {
    let mut data = vec![0.0; m * m];
    let mut d = 1.0;
    for i in 0..m {
        data[i * m + i] = d;
        d *= decay;
        for j in (i + 1)..m {
            data[i * m + j] = rng.random::<f64>() * 2.0 - 1.0;
        }
    }
    UpperTriangular::new(m, data).expect("generated factor is valid")
}

fn random_qbar(rng: &mut ChaCha8Rng, m: usize, box_hi: i64) -> Vec<f64> {
    (0..m)
        .map(|_| rng.random::<f64>() * (box_hi as f64 + 2.0) - 1.0)
        .collect()
}

/// One seeded decoding instance with the given conditioning spread.
pub fn random_instance(seed: u64, index: u64, m: usize, wbit: u8, diag_log10_spread: f64) -> BilsColumnProblem {
    let mut rng = instance_stream(seed, index);
    let box_hi = (1i64 << wbit) - 1;
    let rbar = random_upper_triangular(&mut rng, m, diag_log10_spread);
    let qbar = random_qbar(&mut rng, m, box_hi);
    BilsColumnProblem::new(rbar, qbar, vec![0.0; m], box_hi).expect("generated instance is valid")
}

/// One seeded instance with row-wise diagonal decay.
pub fn decaying_instance(seed: u64, index: u64, m: usize, wbit: u8, decay: f64) -> BilsColumnProblem {
    let mut rng = instance_stream(seed, index);
    let box_hi = (1i64 << wbit) - 1;
    let rbar = decaying_upper_triangular(&mut rng, m, decay);
    let qbar = random_qbar(&mut rng, m, box_hi);
    BilsColumnProblem::new(rbar, qbar, vec![0.0; m], box_hi).expect("generated instance is valid")
}

/// Diagonal-only instance; decoding reduces to per-coordinate rounding.
pub fn diagonal_instance(seed: u64, index: u64, m: usize, wbit: u8) -> BilsColumnProblem {
    let mut rng = instance_stream(seed, index);
    let box_hi = (1i64 << wbit) - 1;
    let diag: Vec<f64> = (0..m).map(|_| 0.2 + rng.random::<f64>() * 2.0).collect();
    let rbar = UpperTriangular::from_diag(&diag).expect("positive diagonal");
    let qbar = random_qbar(&mut rng, m, box_hi);
    BilsColumnProblem::new(rbar, qbar, vec![0.0; m], box_hi).expect("generated instance is valid")
}

fn instance_stream(seed: u64, index: u64) -> ChaCha8Rng {
    // A dedicated namespace away from the decoder's (column, path) streams.
    path_stream(seed ^ 0x1257_A3B1_9C64_D00D, index, u64::MAX - 1)
}
