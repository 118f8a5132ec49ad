//! Reproducible random streams.
//!
//! Every sample index gets its own Xoshiro256++ generator, seeded from
//! `(seed, index)` through a SplitMix64-style mixer. Results therefore do not
//! depend on how indices are distributed over worker threads.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SampleRng = Xoshiro256PlusPlus;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for stream `index` under master `seed`.
pub fn stream(seed: u64, index: u64) -> SampleRng {
    SampleRng::seed_from_u64(splitmix(splitmix(seed) ^ index))
}
