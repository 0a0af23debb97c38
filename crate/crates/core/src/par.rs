//! Data-parallel helpers.
//!
//! With the `parallel` feature enabled, work is spread over the current rayon
//! pool; otherwise everything runs on the calling thread. Results are always
//! returned in index order, so output never depends on scheduling.

/// Evaluates `f(0), f(1), ..., f(n - 1)` and collects the results in order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Evaluates `f(0), f(1), ..., f(n - 1)` and collects the results in order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential counterpart of [`map_indexed`], always on the calling thread.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Number of worker threads the parallel helpers will use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
