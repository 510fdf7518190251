//! Seeded random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DesignRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> DesignRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent sub-stream seed for `stream` (restart index, replicate, ...).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed ^ mix64(stream)
}
