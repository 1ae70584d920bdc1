//! Deterministic random streams.
//!
//! Every generator in the crate is a [`ChaCha8Rng`]. Independent streams are
//! obtained by mixing a master seed with a tuple of tags (scenario index,
//! repetition, replica, ...) through SplitMix64, so results do not depend on
//! the order in which work items are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and an ordered list of tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| {
            splitmix64(acc.rotate_left(17).wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ splitmix64(t))
        })
}

/// Generator seeded from `seed` alone.
pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for the stream identified by `(master, tags...)`.
pub fn stream(master: u64, tags: &[u64]) -> SimRng {
    rng_from_seed(derive_seed(master, tags))
}
