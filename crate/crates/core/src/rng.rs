//! Seeded, portable randomness.
//!
//! Every random object is drawn from a ChaCha8 stream. A user seed selects the
//! key (via `seed_from_u64`) and a 64-bit stream id separates independent
//! consumers, so pre-drawing objects in any order yields the same values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a seed with a tag (splitmix64 finalizer). Used to derive child seeds
/// for nested procedures, e.g. one seed per greedy step.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        ^ tag
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
