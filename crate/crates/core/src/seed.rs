//! Deterministic seed derivation.
//!
//! Child seeds are `mix(master ^ mix(index + 1))` where `mix` is the
//! SplitMix64 finalizer. The mapping is fixed so that replicate `k` of a run
//! with master seed `s` is reproducible across machines and thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `master`.
pub fn child_seed(master: u64, index: u64) -> u64 {
    mix(master ^ mix(index.wrapping_add(1)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
