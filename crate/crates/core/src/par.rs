//! Data-parallel kernels with a sequential fallback.
//!
//! Every kernel returns the same result under both execution modes; the
//! parallel variants only change how the work is scheduled.

use crate::limits::Execution;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
fn parallel(exec: Execution) -> bool {
    cfg!(feature = "parallel") && exec == Execution::Parallel
}

/// Smallest `m` in `range` with `pred(m)`.
pub fn find_first<F>(exec: Execution, range: std::ops::Range<u64>, pred: F) -> Option<u64>
where
    F: Fn(u64) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel(exec) {
        return range.into_par_iter().find_first(|m| pred(*m));
    }
    let _ = exec;
    range.into_iter().find(|m| pred(*m))
}

/// All `m` in `range` with `pred(m)`, ascending.
pub fn filter<F>(exec: Execution, range: std::ops::Range<u64>, pred: F) -> Vec<u64>
where
    F: Fn(u64) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel(exec) {
        return range.into_par_iter().filter(|m| pred(*m)).collect();
    }
    let _ = exec;
    range.into_iter().filter(|m| pred(*m)).collect()
}

/// `items.map(f)`, order preserving.
pub fn map<T, U, F>(exec: Execution, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel(exec) {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Index of the first item satisfying `pred`.
pub fn position<T, F>(exec: Execution, items: &[T], pred: F) -> Option<usize>
where
    T: Sync,
    F: Fn(&T) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel(exec) {
        return items.par_iter().position_first(pred);
    }
    let _ = exec;
    items.iter().position(pred)
}
