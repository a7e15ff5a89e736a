//! Seeded random streams.
//!
//! Every random draw in the library comes from a ChaCha8 generator keyed by
//! a 64-bit seed and a stream id. Distinct purposes (user placement, scatterer
//! angles, optimizer initialization) use distinct streams so that changing one
//! consumer never perturbs another, and per-trial seeds are derived with
//! [`trial_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_PLACEMENT: u64 = 1;
pub const STREAM_CLUSTERS: u64 = 2;
pub const STREAM_INIT: u64 = 3;

/// Generator for `(seed, stream)`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives the seed of trial `trial` from a master seed (SplitMix64 finalizer).
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(trial.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
