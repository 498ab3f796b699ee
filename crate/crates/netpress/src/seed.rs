//! Every random draw in the crate flows from one root seed through named
//! sub-streams, so each stage (init, shuffle, split, ...) is reproducible
//! on its own no matter what ran before it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Derive a stage seed from the root seed and a stream name.
/// FNV-1a over the tag, mixed with the root through splitmix64.
pub fn sub_seed(root: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    splitmix64(root ^ h)
}

pub fn rng_for(root: u64, tag: &str) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(sub_seed(root, tag))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
