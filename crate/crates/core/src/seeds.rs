//! Seed derivation for reproducible fan-out.
//!
//! Every randomized stage of the pipeline owns a single `u64` seed and
//! derives independent child seeds for sub-tasks (images of a dataset,
//! samples of a batch) so that work can be distributed without threading
//! a mutable RNG through everything.

use rand::rngs::StdRng;
use rand::SeedableRng;

/// SplitMix64 finalizer; decorrelates consecutive inputs.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the `index`-th child seed of `seed`.
pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(1)))
}

/// Seeded RNG for a derived stream.
pub fn rng(seed: u64, index: u64) -> StdRng {
    StdRng::seed_from_u64(derive(seed, index))
}
