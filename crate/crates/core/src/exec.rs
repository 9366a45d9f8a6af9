//! Fan-out of independent per-zone work.
//!
//! The core crate stays single-threaded; a threaded implementation lives in
//! the `dmpc` crate. Implementations must return results in index order so
//! that every reduction downstream is independent of scheduling.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0), …, f(n−1)` and returns the results in index order.
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;

    /// Monotonic time in seconds, used only for timing reports. The default
    /// clock is frozen at zero.
    fn now(&self) -> f64 {
        0.0
    }
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..n).map(f).collect()
    }
}

/// Result of a timed closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timed<T> {
    pub value: T,
    pub seconds: f64,
}

/// Runs `f` and measures it with the executor's clock.
pub fn timed<E: Executor, T>(exec: &E, f: impl FnOnce() -> T) -> Timed<T> {
    let start = exec.now();
    let value = f();
    Timed { value, seconds: (exec.now() - start).max(0.0) }
}
