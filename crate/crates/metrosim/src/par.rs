//! Data-parallel map over a slice, with a sequential fallback when the
//! `parallel` feature is disabled. Both versions expose identical bounds so
//! call sites compile unchanged either way.

#[cfg(feature = "parallel")]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(&f).collect()
}
