//! Counter-based random streams.
//!
//! Every Monte Carlo run is split into fixed blocks of [`BLOCK_SIZE`]
//! observations. Block `b` of stream `s` under seed `k` is generated by a
//! ChaCha8 keystream keyed by `k`, with stream id `s` and the word counter
//! positioned at `b << 32`, so any block can be regenerated on its own and
//! the partition of work between threads never affects the numbers drawn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Observations per block.
pub const BLOCK_SIZE: usize = 4096;

/// Generator for block `block` of `(seed, stream)`.
pub fn block_rng(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos((block as u128) << 32);
    rng
}

/// Number of blocks needed for `n` observations.
pub fn block_count(n: u64) -> u64 {
    n.div_ceil(BLOCK_SIZE as u64)
}

/// Observations in block `b` out of `n`.
pub fn block_len(n: u64, b: u64) -> usize {
    let start = b * BLOCK_SIZE as u64;
    (n - start).min(BLOCK_SIZE as u64) as usize
}
