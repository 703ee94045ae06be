//! Seeded random streams.
//!
//! Every replicate gets its own ChaCha8 stream addressed by
//! `(seed, purpose, index)`. Streams never depend on which thread runs the
//! replicate, which is what keeps parallel runs bit-identical to sequential
//! ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Default seed used by the command-line tool.
pub const DEFAULT_SEED: u64 = 42;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for replicate `index` of the job identified by `purpose`.
pub fn stream(seed: u64, purpose: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ splitmix64(purpose));
    rng.set_stream(index);
    rng
}

/// Single generator for one-off draws.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
