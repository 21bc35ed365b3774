//! Deterministic derived random streams.
//!
//! Every stochastic component takes its stream from a `(master_seed, index)`
//! pair, so replications can run on any number of workers and still
//! reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// SplitMix64 finaliser.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for child `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix(mix(master) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Independent stream for child `index` of `master`.
pub fn stream(master: u64, index: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}
