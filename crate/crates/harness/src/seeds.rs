//! Per-run seeding.
//!
//! Each run index gets one seed shared by all strategies. Plant noise,
//! collection inputs and excitation use separate ChaCha streams of that seed,
//! so the strategies see identical noise and identical initial data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const NOISE_STREAM: u64 = 1;
pub const COLLECTION_STREAM: u64 = 2;
pub const EXCITATION_STREAM: u64 = 3;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seeds for runs `0..runs`, drawn from the master seed.
pub fn run_seeds(master_seed: u64, runs: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..runs).map(|_| rng.random()).collect()
}
