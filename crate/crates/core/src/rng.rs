//! Seeded random streams. Every Monte-Carlo trial gets its own ChaCha stream keyed by
//! `(sweep index, trial index)` so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream for one trial of one sweep point.
pub fn trial_stream(seed: u64, sweep_index: usize, trial_index: usize) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((sweep_index as u64) << 32) | (trial_index as u64 & 0xffff_ffff));
    rng
}
