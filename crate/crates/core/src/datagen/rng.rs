//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8, a counter-based
//! generator with 2^64 independent streams per seed. Each component owns a
//! fixed stream id, so adding draws to one component never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids reserved per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    StationaryInput = 1,
    Noise = 2,
    MackeyGlassHistory = 3,
    Testing = 0xffff,
}

/// Generator for `(seed, stream, substream)`; `substream` separates e.g. noise levels.
pub fn stream(seed: u64, stream: Stream, substream: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | substream as u64);
    rng
}
