//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) independent work items are spread over
//! the rayon pool; without it every call degrades to a plain iterator. Output
//! order always follows input order, so results are identical either way.

/// How a batch of independent evaluations is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Parallel when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Auto,
    Sequential,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Auto
    }
}

/// Map `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
    }
    let _ = exec;
    items.iter().map(f).collect()
}
