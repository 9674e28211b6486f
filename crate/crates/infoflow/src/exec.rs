//! Data-parallel dispatch. Results are always collected in index order and
//! reduced sequentially, so numeric output is bitwise identical whether the
//! `parallel` feature is on, off, or throttled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Work items smaller than this are not worth the fork/join overhead.
const PARALLEL_THRESHOLD: usize = 32;

/// Applies `f` to 0..count, in parallel when requested and compiled in.
/// The output order is the index order regardless of scheduling.
pub(crate) fn map_indexed<T, F>(count: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if parallel && count >= PARALLEL_THRESHOLD {
            return (0..count).into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    (0..count).map(f).collect()
}

/// Default execution mode for public entry points.
pub(crate) fn default_parallel() -> bool {
    cfg!(feature = "parallel")
}
