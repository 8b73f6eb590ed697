//! Data-parallel map with a deterministic result order. Without the
//! `parallel` feature, or with one thread, everything runs in the caller.

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indexed<R, F>(threads: usize, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads > 1 && n > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build();
            if let Ok(pool) = pool {
                return pool.install(|| (0..n).into_par_iter().map(&f).collect());
            }
        }
    }
    let _ = threads;
    (0..n).map(f).collect()
}

/// Maps `f` over a slice, returning results in slice order.
pub fn map<T, R, F>(threads: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_indexed(threads, items.len(), |i| f(&items[i]))
}

/// Whether the crate was built with rayon support.
pub fn available() -> bool {
    cfg!(feature = "parallel")
}
