//! Seeded random streams.
//!
//! Every random draw in a run derives from one `u64` seed. Independent
//! chains use distinct ChaCha streams of that seed, so results do not depend
//! on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RunRng = ChaCha8Rng;

/// Generator for stream 0 of `seed`.
pub fn seeded(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
