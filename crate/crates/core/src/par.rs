//! Execution-mode switch for the data-parallel kernels.
//!
//! Every kernel takes an [`ExecMode`]. With the `parallel` feature disabled
//! [`ExecMode::Parallel`] silently runs sequentially, so callers never need
//! their own `cfg` guards.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

impl ExecMode {
    /// True when this mode will actually fan out over a thread pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Fill `out[j] = f(j)`.
pub fn fill_indexed<F>(out: &mut [f64], mode: ExecMode, f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        out.par_iter_mut()
            .enumerate()
            .with_min_len(64)
            .for_each(|(j, o)| *o = f(j));
        return;
    }
    let _ = mode;
    out.iter_mut().enumerate().for_each(|(j, o)| *o = f(j));
}

/// Map `f` over `items`, preserving order.
pub fn map_collect<T, R, F>(items: &[T], mode: ExecMode, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}
