//! Hierarchical seed derivation.
//!
//! Every random decision in the stack draws from a ChaCha stream whose seed
//! is a pure function of the root seed and a label path, so adding or
//! removing one consumer never perturbs the streams of the others. ChaCha
//! is used instead of `StdRng` because its output is stable across
//! platforms and crate versions.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a label.
///
/// FNV-1a over the label bytes mixed with the parent, then a splitmix64
/// finalizer so short labels still produce well-spread seeds.
pub fn child_seed(seed: u64, label: &str) -> u64 {
    let mut h = FNV_OFFSET ^ seed;
    for &b in label.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix(h)
}

/// Derives an indexed child seed, for per-episode or per-item streams.
pub fn child_seed_indexed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix(child_seed(seed, label) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Builds the deterministic RNG used throughout the crate.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
