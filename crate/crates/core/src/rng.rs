//! Seeded random streams.
//!
//! Every random sequence is a ChaCha8 stream selected by `(seed, stream id)`,
//! so draws are reproducible and independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used by the series draws.
pub(crate) const ARRIVALS: u64 = 0;
pub(crate) const LOCATIONS: u64 = 1;
pub(crate) const SIGNS: u64 = 2;
pub(crate) const COUNT: u64 = 3;

/// Independent stream `id` of `seed`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Seed for path `index` of a campaign with base seed `base` (SplitMix64 finaliser).
pub fn path_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
