//! Data-parallel inner loops, with a sequential fallback when the `parallel`
//! feature is disabled.
//!
//! Every function here maps an index range into a `Vec` whose slot `i` depends
//! only on `i`, so the parallel and sequential builds produce bit-identical
//! results. Reductions over those vectors are done sequentially by the callers
//! to keep floating-point summation order fixed.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().with_min_len(64).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
