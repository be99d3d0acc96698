//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these run on the rayon pool;
//! without it they fall back to plain iterators. Every reduction used by
//! the crate is an exact rational sum or an order-preserving collect, so
//! results are identical either way.

pub use self::actual::{filter_map_collect, map_collect, try_map_collect};

/// Caps the global worker pool. Returns `false` if the pool was already
/// initialised or the crate was built without the `parallel` feature.
pub fn set_threads(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        false
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(feature = "parallel")]
mod actual {
    use rayon::prelude::*;

    pub fn map_collect<T, R, F>(source: &[T], map_op: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        source.par_iter().map(map_op).collect()
    }

    pub fn try_map_collect<T, R, E, F>(source: &[T], map_op: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        source.par_iter().map(map_op).collect()
    }

    /// Keeps source order.
    pub fn filter_map_collect<R, F>(count: usize, map_op: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> Option<R> + Sync + Send,
    {
        (0..count).into_par_iter().filter_map(map_op).collect()
    }
}

#[cfg(not(feature = "parallel"))]
mod actual {
    pub fn map_collect<T, R, F>(source: &[T], map_op: F) -> Vec<R>
    where
        F: Fn(&T) -> R,
    {
        source.iter().map(map_op).collect()
    }

    pub fn try_map_collect<T, R, E, F>(source: &[T], map_op: F) -> Result<Vec<R>, E>
    where
        F: Fn(&T) -> Result<R, E>,
    {
        source.iter().map(map_op).collect()
    }

    pub fn filter_map_collect<R, F>(count: usize, map_op: F) -> Vec<R>
    where
        F: Fn(usize) -> Option<R>,
    {
        (0..count).filter_map(map_op).collect()
    }
}
