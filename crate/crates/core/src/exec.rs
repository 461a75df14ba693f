//! Execution policy for the entry-parallel kernels.
//!
//! The sequential path accumulates entries strictly in canonical order and is
//! what every bit-exact test exercises. The parallel path splits the entry
//! list into fixed-size chunks, accumulates each chunk separately and adds
//! the partial results in chunk order. Its rounding differs from the
//! sequential path, but it does not depend on the number of worker threads.
//! Without the `parallel` feature the parallel path runs the same chunked
//! reduction on the calling thread.

use serde::{Deserialize, Serialize};

/// Entries per work unit on the parallel path.
pub(crate) const CHUNK: usize = 16 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        matches!(self, Execution::Parallel)
    }
}

/// Maps `f` over `items` and returns the results in input order.
pub(crate) fn map_ordered<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Chunked reduction over `items`: `fold` accumulates one chunk into a fresh
/// accumulator, `merge` adds chunk accumulators left to right.
pub(crate) fn chunked_reduce<T, A, I, F, M>(
    exec: Execution,
    items: &[T],
    init: I,
    fold: F,
    mut merge: M,
) -> A
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &[T]) + Sync + Send,
    M: FnMut(&mut A, A),
{
    match exec {
        Execution::Sequential => {
            let mut acc = init();
            fold(&mut acc, items);
            acc
        }
        Execution::Parallel => {
            let chunks: Vec<&[T]> = items.chunks(CHUNK).collect();
            let partials = map_ordered(exec, &chunks, |chunk| {
                let mut acc = init();
                fold(&mut acc, chunk);
                acc
            });
            let mut iter = partials.into_iter();
            let mut acc = iter.next().unwrap_or_else(&init);
            for p in iter {
                merge(&mut acc, p);
            }
            acc
        }
    }
}

/// Caps the global rayon pool. Returns false when the pool was already built
/// or the crate was compiled without parallel support.
pub fn init_thread_pool(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}
