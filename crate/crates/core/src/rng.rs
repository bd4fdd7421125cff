//! Seeded RNG stream derivation.
//!
//! All randomness in the crate flows through ChaCha streams derived from a
//! single master seed. Work items (dataset indices, test instances, batch
//! shuffles) each get their own stream so results do not depend on
//! execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for stream `index` under `seed`. Streams are statistically
/// independent and stable across runs.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream keyed by a string label (instance ids, phase names).
pub fn named_rng(seed: u64, name: &str) -> ChaCha8Rng {
    stream_rng(seed, fnv1a(name.as_bytes()))
}

/// FNV-1a 64-bit hash. Stable across platforms and Rust versions, which
/// matters because dataset files and WL hashes must be reproducible.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Combine two hashes (used by WL refinement).
pub fn fnv1a_combine(seed_hash: u64, value: u64) -> u64 {
    let mut hash = seed_hash;
    for b in value.to_le_bytes() {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
