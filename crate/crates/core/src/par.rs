//! Data-parallel helpers. With the `parallel` feature (on by default) the
//! batch loops run on rayon; without it, or with [`Execution::Sequential`],
//! they run on the calling thread. Results are identical either way: maps
//! preserve input order and reductions use a total order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Order-preserving map over `items`.
pub fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Order-preserving map over `0..n`.
pub fn map_range<U, F>(exec: Execution, n: u64, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(u64) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Maps `lo..hi` through `f` and keeps the maximum under `better`, which must
/// be a strict total order so the answer does not depend on scheduling.
pub fn best_in_range<U, F, B>(exec: Execution, lo: u64, hi: u64, f: F, better: B) -> Option<U>
where
    U: Send,
    F: Fn(u64) -> Option<U> + Sync + Send,
    B: Fn(&U, &U) -> bool + Sync + Send,
{
    let pick = |a: Option<U>, b: Option<U>| match (a, b) {
        (Some(x), Some(y)) => Some(if better(&y, &x) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    };
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (lo..hi).into_par_iter().map(&f).reduce(|| None, pick);
    }
    let _ = exec;
    (lo..hi).map(&f).fold(None, pick)
}
