//! Seeded random streams.
//!
//! Every random draw in the crate goes through a [`ChaCha8Rng`] created here,
//! so a `(seed, stream)` pair fully determines the sequence.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Named sub-streams so independent parts of an experiment never share state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    System = 1,
    Inputs = 2,
    Observation = 3,
    SolverInit = 4,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    substream(seed, which as u64)
}

/// Stream `id` of the generator seeded with `seed`.
pub fn substream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Deterministic per-cell seed for experiment grids.
pub fn cell_seed(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the packed coordinates
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
