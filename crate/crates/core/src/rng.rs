//! Reproducible random streams.
//!
//! All simulators draw from ChaCha8. Ensemble member `k` of a run seeded with
//! `seed` uses the ChaCha stream `k` of the key derived from `seed`, so paths
//! are independent of scheduling and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for a single (non-ensemble) run.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for ensemble member `index`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
