//! Replica ensembles. Replica `i` always receives the seed
//! `derive_seed(base, stream, i)` and results come back in index order, so
//! the output does not depend on the thread count.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::derive_seed;

/// Runs `n` replicas in parallel; `f(index, seed)`.
pub fn replicas<T, F>(n: usize, base_seed: u64, stream: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(i, derive_seed(base_seed, stream, i as u64)))
        .collect()
}

/// Like [`replicas`] but stops at the first error (in index order).
pub fn try_replicas<T, F>(n: usize, base_seed: u64, stream: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync + Send,
{
    replicas(n, base_seed, stream, f).into_iter().collect()
}

/// Runs `f` on a local pool with `threads` workers (0 = rayon default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
