//! Seeded, splittable random streams. Stream `i` of seed `s` is ChaCha8 keyed by `s` with
//! stream id `i`, so sample `i` draws the same digits regardless of how work is sharded.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Recorded in output provenance.
pub const RNG_NAME: &str = "rand_chacha::ChaCha8Rng/0.3 seed_from_u64+set_stream";

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
