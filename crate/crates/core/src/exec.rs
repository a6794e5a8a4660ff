//! Data-parallel execution helpers.
//!
//! Every helper parallelizes over *independent output slots* only; no
//! floating-point reduction order ever depends on thread count. The inner
//! summation loops live in the closures and run in a fixed index order, so
//! the sequential build, the rayon build, and any rayon thread count all
//! produce bit-identical results.
//!
//! With the `parallel` feature enabled, [`set_parallel`] switches between
//! the rayon path and the plain loop at runtime (used by the benches to
//! compare both in one run). Without the feature, rayon is not compiled in
//! and everything is sequential.

#[cfg(feature = "parallel")]
use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enables or disables the rayon path at runtime. No-op without the
/// `parallel` feature. Results are bit-identical either way.
pub fn set_parallel(enabled: bool) {
    #[cfg(feature = "parallel")]
    PARALLEL.store(enabled, Ordering::Relaxed);
    #[cfg(not(feature = "parallel"))]
    let _ = enabled;
}

/// True if the rayon path is compiled in and currently enabled.
pub fn parallel_enabled() -> bool {
    #[cfg(feature = "parallel")]
    {
        PARALLEL.load(Ordering::Relaxed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        false
    }
}

/// `out[i] = f(i, &items[i])` over independent slots.
pub fn map_collect<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return items
            .par_iter()
            .enumerate()
            .map(|(i, item)| f(i, item))
            .collect();
    }
    items
        .iter()
        .enumerate()
        .map(|(i, item)| f(i, item))
        .collect()
}

/// `f(i, &mut items[i])` over independent slots.
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        items
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, item)| f(i, item));
        return;
    }
    items
        .iter_mut()
        .enumerate()
        .for_each(|(i, item)| f(i, item));
}

/// Visits disjoint `chunk_len`-sized rows of a flat buffer:
/// `f(row_index, row_slice)`. The final chunk is shorter when `chunk_len`
/// does not divide the buffer length.
pub fn for_each_row_mut<F>(data: &mut [f64], chunk_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    debug_assert!(chunk_len > 0);
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    data.chunks_mut(chunk_len)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// Runs `f(i)` for `i in 0..n`, where each call touches disjoint state
/// captured by the closure (e.g. writing files named by `i`).
pub fn for_each_index<F>(n: usize, f: F)
where
    F: Fn(usize) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        (0..n).into_par_iter().for_each(f);
        return;
    }
    (0..n).for_each(f);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_collect_preserves_order() {
        let items: Vec<usize> = (0..97).collect();
        let out = map_collect(&items, |i, x| i * 1000 + x);
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, i * 1000 + i);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let items: Vec<f64> = (0..64).map(|i| i as f64 * 0.37).collect();
        set_parallel(false);
        let seq = map_collect(&items, |_, x| x.sin() * x.cos());
        set_parallel(true);
        let par = map_collect(&items, |_, x| x.sin() * x.cos());
        assert_eq!(seq, par);
    }
}
