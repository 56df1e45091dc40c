//! Seeded, splittable random streams.
//!
//! Every stochastic routine takes an explicit generator. Independent
//! replicates derive their generator from `(seed, stream)` so that results do
//! not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Rng = ChaCha12Rng;

/// Generator for stream `stream` of a master seed.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for the default stream of `seed`.
pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
