//! Data-parallel execution helpers.
//!
//! With the `parallel` feature (the default) these fan work out over rayon;
//! without it they degrade to plain sequential iteration. Results always come
//! back in input order, and callers that care about floating-point summation
//! order reduce over the returned chunks themselves, so enabling parallelism
//! never changes numeric results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Applies `f` to fixed-size chunks of `items`, in parallel when enabled.
pub fn map_chunks<I, O, F>(items: &[I], chunk_size: usize, f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&[I]) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_chunks(chunk_size.max(1)).map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_chunks_seq(items, chunk_size, f)
    }
}

/// Sequential twin of [`map_chunks`], always available (benchmarks and
/// determinism tests compare the two).
pub fn map_chunks_seq<I, O, F>(items: &[I], chunk_size: usize, f: F) -> Vec<O>
where
    F: Fn(&[I]) -> O,
{
    items.chunks(chunk_size.max(1)).map(f).collect()
}

/// Applies `f` per item, in parallel when enabled.
pub fn map<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
