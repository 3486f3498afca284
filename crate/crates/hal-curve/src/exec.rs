//! Execution strategy: data-parallel maps with a sequential fallback.
//!
//! Independent per-fold and per-replicate work is dispatched through
//! [`map_collect`]. With the `parallel` feature (the default) it fans out on
//! the rayon thread pool; without it, it runs a plain sequential loop. The
//! sequential twin [`map_collect_seq`] is always compiled so benchmarks can
//! compare the two on the same build.
//!
//! Results are collected in input order and any subsequent reduction happens
//! sequentially, so numeric output is identical with and without the feature:
//! parallelism never reorders floating-point accumulation.

/// Maps `f` over `items`, collecting results in input order.
///
/// Parallel when the `parallel` feature is enabled, sequential otherwise.
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Sequential twin of [`map_collect`]; always compiled, used by benchmarks
/// and as a reference for determinism tests.
pub fn map_collect_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential twin of [`map_indices`].
pub fn map_indices_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}
