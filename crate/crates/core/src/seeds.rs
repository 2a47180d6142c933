//! Seed splitting for parallel samplers.
//!
//! Every parallel sampler in the crate works in fixed-size blocks; block `b`
//! of stream `s` draws from `ChaCha8Rng::seed_from_u64(split(seed, s, b))`.
//! Results therefore do not depend on the thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per block in every blocked sampler.
pub const BLOCK: u64 = 4096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of block `block` in stream `stream`.
pub fn split(seed: u64, stream: u64, block: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ block)
}

pub fn block_rng(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split(seed, stream, block))
}

/// Splits `0..total` into `(block_index, start, end)` ranges of size [`BLOCK`].
pub fn blocks(total: u64) -> impl Iterator<Item = (u64, u64, u64)> {
    let nblocks = total.div_ceil(BLOCK);
    (0..nblocks).map(move |b| (b, b * BLOCK, ((b + 1) * BLOCK).min(total)))
}
