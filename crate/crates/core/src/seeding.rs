//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha stream selected by a global
//! seed and a stream id, so `(ε index, replicate)` tasks can run in any order
//! or in parallel and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Deterministic generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packs task coordinates into a stream id. Components must fit in 16 bits.
pub fn stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(0u64, |acc, &p| {
        debug_assert!(p < 1 << 16);
        (acc << 16) | (p & 0xffff)
    })
}
