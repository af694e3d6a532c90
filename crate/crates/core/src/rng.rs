//! Seeded random streams.
//!
//! Every stochastic decision in the crate draws from a [`SeededRng`]. Work that
//! may run in parallel (fitness evaluations in particular) derives its own
//! stream from a `(seed, a, b)` key so the result does not depend on the
//! schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream keyed by `(seed, a, b)`, e.g. (run seed, generation,
/// individual index).
pub fn substream(seed: u64, a: u64, b: u64) -> SeededRng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b.rotate_left(17));
    ChaCha8Rng::seed_from_u64(key)
}
