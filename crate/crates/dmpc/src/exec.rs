//! Thread-pool executor with a wall clock.

use dmpc_core::exec::Executor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};
use std::time::Instant;

/// Fans zone work out over a dedicated rayon pool.
///
/// Results come back in index order, so reductions in the core crate see
/// the same operands in the same order for every pool size.
pub struct Parallel {
    pool: ThreadPool,
    origin: Instant,
}

impl Parallel {
    /// `jobs = 0` lets rayon pick the thread count.
    pub fn new(jobs: usize) -> Result<Self, ThreadPoolBuildError> {
        let pool = ThreadPoolBuilder::new().num_threads(jobs).build()?;
        Ok(Self { pool, origin: Instant::now() })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        if n <= 1 || self.pool.current_num_threads() == 1 {
            return (0..n).map(f).collect();
        }
        // `&F` is `Send` because `F: Sync`.
        let f = &f;
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }

    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}
