//! Parallel execution of independent seeded trials.

use std::sync::Once;

use rayon::prelude::*;

use crate::error::Result;
use crate::seeding::derive_seed;

static POOL: Once = Once::new();

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "RMT_THREADS";

/// Configures the global worker pool from `RMT_THREADS` (once per process).
pub fn init_pool() {
    POOL.call_once(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&t| t > 0);
        if let Some(t) = threads {
            // Fails only if a global pool already exists; keep that pool.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    });
}

/// Runs `f(index, seed)` for `index in 0..count` with
/// `seed = derive_seed(master, index)`; results come back in index order, so
/// any later reduction is independent of scheduling. The first failure (by
/// index) is returned, tagged with its trial index.
pub fn run_trials<T, F>(count: usize, master: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync,
{
    init_pool();
    crate::spectral::init_linalg();
    let results: Vec<Result<T>> = (0..count as u64)
        .into_par_iter()
        .map(|i| f(i, derive_seed(master, i)).map_err(|e| e.in_trial(i)))
        .collect();
    results.into_iter().collect()
}

/// Mean and standard error of the mean; `(mean, 0)` for a single value.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
