//! Seeded randomness.
//!
//! Every stochastic step draws from [`ChaCha8Rng`] (rand_chacha 0.3) seeded
//! from a `u64`. Normal variates use the Box-Muller transform on two uniform
//! draws; only the cosine branch is kept, so each normal consumes exactly two
//! uniforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in run manifests.
pub const PRNG_ID: &str = "ChaCha8Rng (rand_chacha 0.3), seed_from_u64; normals by Box-Muller (cos branch)";

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One standard normal variate from two uniforms.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // u1 in (0, 1] keeps the log finite
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn normal<R: Rng>(rng: &mut R, mean: f64, std_dev: f64) -> f64 {
    mean + std_dev * standard_normal(rng)
}

/// Derives an independent child seed (SplitMix64 finalizer over `base` and `stream`).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
