// SPDX-License-Identifier: Apache-2.0

//! Deterministic random streams.
//!
//! Every trial gets its own ChaCha8 stream keyed by `(seed, trial index)`,
//! so results depend only on the seed and never on how trials are spread
//! over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type TrialRng = ChaCha8Rng;

pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Derives an independent sub-seed, e.g. one per grid cell.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `trials` independent trials in parallel and returns their outcomes
/// in trial order.
pub fn par_trials<T, F>(trials: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut TrialRng) -> T + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(&mut trial_rng(seed, i)))
        .collect()
}
