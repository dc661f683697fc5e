//! Index-ordered batch execution.
//!
//! With the `parallel` feature (default) batches run on rayon; without it,
//! [`Execution::Parallel`] falls back to a sequential loop. Either way
//! `map_indexed(n, f)` returns `[f(0), f(1), .., f(n-1)]`, so callers that
//! derive all randomness from the index get identical output in both modes.

/// How a batch of independent jobs is run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Data-parallel execution. `jobs = None` uses rayon's global pool.
    #[default]
    Parallel,
    /// Data-parallel execution on a dedicated pool of this many workers.
    Jobs(usize),
}

impl Execution {
    /// Maps a `--jobs` value: `Some(1)` is sequential, `Some(n)` a pool of `n`,
    /// `None` or `Some(0)` the default pool.
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(1) => Execution::Sequential,
            Some(0) | None => Execution::Parallel,
            Some(n) => Execution::Jobs(n),
        }
    }

    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => par::map(n, &f),
            #[cfg(feature = "parallel")]
            Execution::Jobs(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                Ok(pool) => pool.install(|| par::map(n, &f)),
                Err(_) => par::map(n, &f),
            },
            #[cfg(not(feature = "parallel"))]
            Execution::Parallel | Execution::Jobs(_) => (0..n).map(f).collect(),
        }
    }
}

#[cfg(feature = "parallel")]
mod par {
    use rayon::prelude::*;

    pub(super) fn map<T, F>(n: usize, f: &F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// True when the crate was built with rayon support.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
