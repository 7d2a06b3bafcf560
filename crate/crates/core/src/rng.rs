//! Counter-based seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator whose seed is a
//! pure function of a base seed and a tuple of counters, so results never
//! depend on thread scheduling or on how many draws a sibling stream made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into a single 64-bit seed.
pub fn mix(base: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Named purposes so that streams for different jobs never collide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Mutation = 2,
    Crossover = 3,
    Replication = 4,
    Mobility = 5,
    FreshNoise = 6,
}

pub fn stream(base: u64, purpose: Purpose, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(base, &[purpose as u64, a, b]))
}
