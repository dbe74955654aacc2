//! Data-parallel trial execution with a sequential fallback.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map trial indices through `f`. Runs on the rayon pool when the
/// `parallel` feature is enabled (the default); results come back in index
/// order either way.
#[cfg(feature = "parallel")]
pub fn map_trials<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_trials<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}

/// Always-sequential variant, kept callable so benchmarks can compare the
/// two execution paths under identical trial streams.
pub fn map_trials_seq<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}
