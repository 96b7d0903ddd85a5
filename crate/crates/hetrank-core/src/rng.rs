//! Deterministic randomness plumbing.
//!
//! Each run owns a [`RunRng`] derived from one 64-bit seed. Unrelated purposes
//! draw from separate sub-streams, so instrumenting one consumer (say, vote
//! generation) can never shift what another one (user picks, setup shuffles)
//! sees. Identical seeds therefore reproduce identical runs bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer: one cheap, well-mixed step from any 64-bit value.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Fold seed components into a single stream seed. Stable across platforms
/// and releases; persisted seeds depend on it.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut acc = 0u64;
    for &part in parts {
        acc = mix64(acc ^ mix64(part));
    }
    acc
}

/// Per-run generator bundle, one independent stream per purpose.
#[derive(Debug, Clone)]
pub struct RunRng {
    /// Outcomes of simulated votes.
    pub votes: ChaCha8Rng,
    /// Which user answers each query.
    pub choices: ChaCha8Rng,
    /// Run setup: ground-truth shuffles and subset draws.
    pub setup: ChaCha8Rng,
}

impl RunRng {
    pub fn new(seed: u64) -> Self {
        let stream = |tag: u64| ChaCha8Rng::seed_from_u64(derive_seed(&[seed, tag]));
        Self {
            votes: stream(1),
            choices: stream(2),
            setup: stream(3),
        }
    }
}
