//! Data-parallel helpers. Sweep points, grid rows, and other independent
//! work items go through [`par_map`], which fans out over the rayon pool
//! when the `parallel` feature is enabled and degrades to a plain sequential
//! loop otherwise. Results keep the input order in both builds, so output
//! files are byte-identical across feature flags and thread counts.

use crate::{Error, Result};

/// Map `f` over `items`, preserving order.
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Pin the global worker pool to `threads` workers. Must run before any
/// parallel work; the pool can only be configured once per process. With the
/// `parallel` feature disabled the request is ignored and work stays on one
/// thread.
pub fn install_pool(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::InvalidInput(
            "thread count must be at least 1".into(),
        ));
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))
    }
    #[cfg(not(feature = "parallel"))]
    Ok(())
}
