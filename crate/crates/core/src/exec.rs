//! Order-preserving evaluation of independent grid points, sequential or on
//! a rayon pool.

use crate::error::{Error, Result};

/// Environment variable overriding the worker count for parallel sweeps.
pub const THREADS_ENV: &str = "QPAIR_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Worker count from [`THREADS_ENV`]; `None` means "all cores".
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::Configuration(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
            Ok(n) => Ok(Some(n)),
        },
    }
}

/// `(0..n).map(f)`, results in index order whatever the execution mode.
pub fn map_indexed<T, F>(n: usize, exec: Exec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    match exec {
        Exec::Sequential => (0..n).map(f).collect(),
        Exec::Parallel => parallel(n, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match threads_from_env()? {
        None => run(),
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?
            .install(run),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..n).map(f).collect()
}
