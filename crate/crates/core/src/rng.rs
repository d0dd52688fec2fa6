//! Seeded randomness with a pinned algorithm.
//!
//! Every stochastic step in the pipeline (dataset shuffles, weight init,
//! minibatch order) draws from ChaCha8 through the helpers below. The
//! shuffle and the normal sampler are spelled out here rather than taken
//! from a generic RNG crate so that recorded seeds replay byte-identically
//! even across dependency upgrades.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Name recorded in artifact headers for the permutation scheme.
pub const RNG_SCHEME: &str = "chacha8-fisher-yates";

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform integer in `[0, bound)` via Lemire's multiply-shift with rejection.
pub fn index_below(rng: &mut impl RngCore, bound: u64) -> u64 {
    assert!(bound > 0);
    loop {
        let x = rng.next_u64();
        let m = (x as u128) * (bound as u128);
        let lo = m as u64;
        if lo < bound {
            let threshold = bound.wrapping_neg() % bound;
            if lo < threshold {
                continue;
            }
        }
        return (m >> 64) as u64;
    }
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(items: &mut [T], rng: &mut impl RngCore) {
    for i in (1..items.len()).rev() {
        let j = index_below(rng, (i + 1) as u64) as usize;
        items.swap(i, j);
    }
}

/// Standard normal sample via Box-Muller.
pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = 1.0 - unit_f64(rng);
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn unit_f64(rng: &mut impl RngCore) -> f64 {
    // top 53 bits -> [0, 1)
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
