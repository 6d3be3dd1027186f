//! Named random sub-streams derived from one user seed.
//!
//! Every stochastic component draws from its own stream (`"data"`, `"init"`,
//! `"dropout"`, `"shuffle"`, ...) so that each can be reproduced in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Seed of the named sub-stream of `seed`.
pub fn derive_seed(seed: u64, stream: &str) -> u64 {
    splitmix64(splitmix64(seed) ^ fnv1a(stream.as_bytes()))
}

/// Generator for the named sub-stream of `seed`.
pub fn stream(seed: u64, name: &str) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, name))
}

/// Generator for the `index`-th item of a named stream (e.g. one per record).
pub fn indexed_stream(seed: u64, name: &str, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(splitmix64(derive_seed(seed, name) ^ splitmix64(index)))
}
