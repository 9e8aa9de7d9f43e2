//! Deterministic per-(column, path) random streams.
//!
//! Every stochastic decode draws from a ChaCha8 stream keyed by hashing
//! `(seed, column, path)` with SplitMix64. Streams are therefore independent
//! of execution order and thread schedule, and the key derivation is part of
//! the reproducibility contract: identical seeds produce identical quantized
//! models on any machine.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a fixed, well-known 64-bit mixer.
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix3(seed: u64, column: u64, path: u64) -> u64 {
    let a = splitmix64(seed);
    let b = splitmix64(a ^ column.wrapping_mul(0xA24B_AED4_963E_E407));
    splitmix64(b ^ path.wrapping_mul(0x9FB2_1C65_1E98_DF25))
}

/// The ChaCha8 stream owned by one `(column, path)` pair.
pub fn path_stream(seed: u64, column: u64, path: u64) -> ChaCha8Rng {
    let key = mix3(seed, column, path);
    let mut bytes = [0u8; 32];
    let mut s = key;
    for chunk in bytes.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}
