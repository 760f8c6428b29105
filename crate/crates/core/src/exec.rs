//! Sequential or rayon-backed execution of independent work items.
//!
//! Results always come back in input order, so callers that fold them
//! sequentially get identical output in either mode.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled and
    /// degrades to sequential otherwise.
    #[default]
    Parallel,
}

impl ExecMode {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map_ordered<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}

/// Like [`map_ordered`], with at most `cap` items in progress at once.
pub fn map_ordered_capped<T, R, F>(mode: ExecMode, cap: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        match rayon::ThreadPoolBuilder::new().num_threads(cap.max(1)).build() {
            Ok(pool) => return pool.install(|| map_ordered(mode, items, f)),
            Err(e) => log::warn!("falling back to sequential execution: {e}"),
        }
    }
    let _ = (mode, cap);
    items.iter().map(f).collect()
}
