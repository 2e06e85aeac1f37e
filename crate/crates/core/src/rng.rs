//! Seed derivation for reproducible, order-independent Monte Carlo.
//!
//! Every replica gets its own ChaCha8 stream seeded with
//! `derive_seed(master, replica_index)`, so results do not depend on how
//! replicas are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type WalkRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for `stream` under `master`. Injective in `stream` for a
/// fixed master.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(master) ^ stream)
}

pub fn stream_rng(master: u64, stream: u64) -> WalkRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}

/// Top 53 bits of a 64-bit word: a uniform draw on `{0, .., 2^53 - 1}`.
#[inline]
pub fn draw53(word: u64) -> u64 {
    word >> 11
}
