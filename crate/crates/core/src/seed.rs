//! Seed derivation for independent, reproducible random substreams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

// Substream tags. Values are arbitrary but frozen: changing one changes every
// downstream artifact.
pub const TAG_SELECTION: u64 = 0x005e_1ec7;
pub const TAG_EPOCH: u64 = 0xe90c;
pub const TAG_INIT: u64 = 0x1417;
pub const TAG_SPLIT: u64 = 0x5b1d;
pub const TAG_RANKING: u64 = 0x4a4c;
pub const TAG_SWEEP: u64 = 0x5eeb;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a base seed with a path of integers into a new seed.
///
/// Order-sensitive: `derive(s, &[a, b]) != derive(s, &[b, a])` in general.
pub fn derive(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(base: u64, path: &[u64]) -> Rng {
    rng(derive(base, path))
}
