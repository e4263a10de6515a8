//! Trial fan-out. Each trial gets its own seed derived from the master seed
//! and its index, and results come back in index order regardless of which
//! worker finished first.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::trial_seed;

/// Runs `trials` independent trials on the current rayon pool.
/// `f` receives `(trial_index, trial_seed)`.
pub fn run_trials<T, F>(trials: usize, master_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| f(i, trial_seed(master_seed, i as u64)))
        .collect()
}

/// Fallible variant of [`run_trials`]; the first error in index order wins.
pub fn try_run_trials<T, F>(trials: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    run_trials(trials, master_seed, f).into_iter().collect()
}
