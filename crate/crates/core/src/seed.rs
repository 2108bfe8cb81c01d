//! Deterministic seed derivation.
//!
//! Every stochastic job (k-means restart, fold shuffle, dropout stream, ...)
//! gets its own seed derived from a global seed and a tag path, so results do
//! not depend on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One step of the SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a sequence of tags into `base`.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Stable 64-bit FNV-1a hash, used to turn string ids into seed tags.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Portable RNG (ChaCha8) for a derived seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform value in [0, 1) from a counter-based hash; used where a stream must
/// be addressable by position (dropout masks).
pub fn unit_from_counter(key: u64, counter: u64) -> f64 {
    let bits = splitmix64(key ^ splitmix64(counter)) >> 11;
    bits as f64 * (1.0 / (1u64 << 53) as f64)
}
