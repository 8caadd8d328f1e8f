//! Seed derivation for reproducible parallelism.
//!
//! Every randomized computation owns a ChaCha stream derived from the master
//! seed plus fixed (stream, index) coordinates, so parallel and serial
//! schedules draw identical values.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids, one per independent consumer of randomness.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const TREE: u64 = 2;
    pub const SVM: u64 = 3;
    pub const MLP_INIT: u64 = 4;
    pub const MLP_SHUFFLE: u64 = 5;
    pub const SYNTH: u64 = 6;
}

/// SplitMix64 finalizer; decorrelates structured seed inputs.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `(master, stream, index)`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ stream.wrapping_mul(0xa076_1d64_78bd_642f)) ^ index)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
