//! Seeded random streams.
//!
//! Every randomized operation draws from a ChaCha8 stream addressed by
//! `(seed, stream)`, so independent work items (one image, one epoch) get
//! decorrelated randomness without sharing a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids for the different consumers of one user-facing seed.
pub mod streams {
    pub const SYNTH_IDENTITY: u64 = 1 << 32;
    pub const SYNTH_IMAGE: u64 = 2 << 32;
    pub const SYNTH_BLUR_SELECT: u64 = 3 << 32;
    pub const ANTITHETICAL: u64 = 4 << 32;
    pub const MODEL_INIT: u64 = 5 << 32;
    pub const EPOCH_SHUFFLE: u64 = 6 << 32;
    pub const EPOCH_AUGMENT: u64 = 7 << 32;
    pub const TRIPLET_ANALYSIS: u64 = 8 << 32;
}
