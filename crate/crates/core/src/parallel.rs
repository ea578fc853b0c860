//! Deterministic parallel trial execution.
//!
//! Trials are split into fixed-size chunks. Each chunk is folded
//! sequentially into a fresh accumulator and the chunk results are merged in
//! chunk order, so the result does not depend on the number of workers.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

pub const DEFAULT_CHUNK: u64 = 256;

/// Mergeable per-chunk partial result.
pub trait Accumulate: Send {
    fn merge(&mut self, other: Self);
}

impl Accumulate for () {
    fn merge(&mut self, _: Self) {}
}

impl Accumulate for u64 {
    fn merge(&mut self, other: Self) {
        *self += other;
    }
}

impl<T: Send> Accumulate for Vec<T> {
    fn merge(&mut self, other: Self) {
        self.extend(other);
    }
}

impl<A: Accumulate, B: Accumulate> Accumulate for (A, B) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}

/// Element-wise sums of fixed-length counters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sums(pub Vec<f64>);

impl Accumulate for Sums {
    fn merge(&mut self, other: Self) {
        if self.0.is_empty() {
            self.0 = other.0;
            return;
        }
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialRunner {
    workers: usize,
    chunk: u64,
    cancel: Option<Arc<AtomicBool>>,
}

impl TrialRunner {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(invalid("workers", "need at least one worker"));
        }
        Ok(Self { workers, chunk: DEFAULT_CHUNK, cancel: None })
    }

    pub fn single() -> Self {
        Self { workers: 1, chunk: DEFAULT_CHUNK, cancel: None }
    }

    /// Changing the chunk size changes how floating-point sums associate.
    pub fn with_chunk(mut self, chunk: u64) -> Self {
        self.chunk = chunk.max(1);
        self
    }

    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    fn cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    /// Run trials `0..trials`, folding each into an accumulator from `init`.
    pub fn run<A, I, F>(&self, trials: u64, init: I, trial: F) -> Result<A>
    where
        A: Accumulate,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, u64) -> Result<()> + Sync,
    {
        let chunks = trials.div_ceil(self.chunk);
        let work = |c: u64| -> Result<A> {
            let mut acc = init();
            let end = ((c + 1) * self.chunk).min(trials);
            for t in c * self.chunk..end {
                if self.cancelled() {
                    return Err(Error::Cancelled);
                }
                trial(&mut acc, t)?;
            }
            Ok(acc)
        };
        let parts: Vec<Result<A>> = if self.workers == 1 {
            (0..chunks).map(work).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
            pool.install(|| (0..chunks).into_par_iter().map(work).collect())
        };
        let mut out = init();
        for p in parts {
            out.merge(p?);
        }
        Ok(out)
    }

    /// Apply `f` to every item, preserving order.
    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Result<Vec<U>>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> Result<U> + Sync,
    {
        let work = |x: &T| -> Result<U> {
            if self.cancelled() {
                return Err(Error::Cancelled);
            }
            f(x)
        };
        if self.workers == 1 {
            return items.iter().map(work).collect();
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
        pool.install(|| items.par_iter().map(work).collect())
    }
}
