//! Data-parallel execution of independent per-state work. With the
//! `parallel` feature the work runs on rayon (thread count capped at
//! runtime); without it, everything runs sequentially. Results are
//! returned in input order, so both paths produce identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) enum Executor {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel(Option<rayon::ThreadPool>),
}

impl Executor {
    /// `threads` = 0 means the default pool; 1 forces sequential execution.
    #[cfg(feature = "parallel")]
    pub(crate) fn new(threads: usize) -> Self {
        match threads {
            1 => Executor::Sequential,
            0 => Executor::Parallel(None),
            n => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => Executor::Parallel(Some(pool)),
                Err(_) => Executor::Parallel(None),
            },
        }
    }

    #[cfg(not(feature = "parallel"))]
    pub(crate) fn new(_threads: usize) -> Self {
        Executor::Sequential
    }

    pub(crate) fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match self {
            Executor::Sequential => items.into_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel(None) => items.into_par_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Parallel(Some(pool)) => {
                pool.install(|| items.into_par_iter().map(f).collect())
            }
        }
    }
}
