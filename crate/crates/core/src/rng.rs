//! Seeded random streams.
//!
//! Every stochastic routine takes a `u64` seed and splits work into
//! fixed-size chunks, each driven by its own ChaCha8 stream. Chunk
//! boundaries do not depend on the rayon pool size, so results are
//! bit-identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Replicates (or rows) per independent substream.
pub const CHUNK: usize = 4096;

/// The `index`-th substream of `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derive a child seed, e.g. per replication of a simulation study.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser over a combined word
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Chunk ranges `[start, end)` covering `0..n`.
pub fn chunks(n: usize) -> impl Iterator<Item = (u64, usize, usize)> {
    (0..n.div_ceil(CHUNK)).map(move |c| (c as u64, c * CHUNK, ((c + 1) * CHUNK).min(n)))
}
