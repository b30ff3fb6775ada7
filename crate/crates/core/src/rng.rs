//! Seeded random number generators.
//!
//! Every stochastic routine takes an explicit `u64` seed. Sub-streams (per chain,
//! per restart, per fold) are derived from a parent seed and a counter so results
//! do not depend on scheduling order.

use rand::SeedableRng;
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};

/// General-purpose generator used by samplers and simulators.
pub type Rng64 = Xoshiro256PlusPlus;

/// Generator for a seed.
pub fn rng(seed: u64) -> Rng64 {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// SplitMix64 stream, used where a plain counter-based generator is wanted
/// (undersampling shuffles).
pub fn splitmix(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Derive an independent child seed from `seed` and `counter`.
pub fn derive_seed(seed: u64, counter: u64) -> u64 {
    // One SplitMix64 finalizer round over the combined words.
    let mut z = seed
        .wrapping_add(counter.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
