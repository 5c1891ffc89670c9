//! Reproducible random streams.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`]. A
//! master seed selects the key and a 64-bit stream id selects one of the
//! 2^64 independent ChaCha streams under that key, so per-trial generators
//! are derived from `(master_seed, stream)` without any shared state and
//! independent of execution order.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Generator for the given master seed on stream 0.
pub fn seeded(master_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master_seed)
}

/// Independent generator for `stream` under `master_seed`.
pub fn substream(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Purpose tags occupying the top 16 bits of a stream id so that different
/// experiment stages never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Purpose {
    Scene = 1,
    SweepTrial = 2,
    CfarCalibration = 3,
    Corpus = 4,
    Gibbs = 5,
    Redundancy = 6,
}

/// Packs `(purpose, group, index)` into a stream id: 16 bits of purpose,
/// 16 bits of group (e.g. SNR grid index) and 32 bits of trial index.
pub fn stream_id(purpose: Purpose, group: u16, index: u32) -> u64 {
    ((purpose as u64) << 48) | ((group as u64) << 32) | index as u64
}
