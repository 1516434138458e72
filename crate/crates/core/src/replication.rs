//! Seeded, order-independent Monte Carlo replication.
//!
//! Replication `i` of a run with master seed `s` uses a ChaCha8 stream seeded
//! with the `(i + 1)`-th SplitMix64 output started from `s`, so results depend
//! only on `(s, i)` and never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// SplitMix64 increment (the 64-bit golden ratio).
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// SplitMix64 output function applied to an already advanced state.
pub fn splitmix64_mix(state: u64) -> u64 {
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index`.
pub fn replication_seed(master: u64, index: usize) -> u64 {
    let steps = (index as u64).wrapping_add(1);
    splitmix64_mix(master.wrapping_add(steps.wrapping_mul(GOLDEN_GAMMA)))
}

pub fn replication_rng(master: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replication_seed(master, index))
}

/// Runs `f(i, rng_i)` for `i in 0..replications` on `parallelism` threads and
/// returns the results in replication order.
pub fn run_replications<T, F>(replications: usize, master: u64, parallelism: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..replications)
            .into_par_iter()
            .map(|i| f(i, &mut replication_rng(master, i)))
            .collect()
    }))
}

/// Wilson score interval for a binomial proportion at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
