//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper here is elementwise or chunk-disjoint: no floating-point
//! reduction happens across threads, so the `parallel` feature changes wall
//! time but never a single output bit. Reductions that feed assertions or
//! persisted numbers go through [`crate::stats::kahan_sum`] sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to every element, in parallel when enabled.
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    items.par_iter_mut().for_each(f);
    #[cfg(not(feature = "parallel"))]
    items.iter_mut().for_each(f);
}

/// Apply `f` to `(index, element)` pairs.
pub fn for_each_indexed_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    #[cfg(not(feature = "parallel"))]
    items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
}

/// Apply `f` to disjoint chunks of `size` elements, handing each invocation
/// a scratch value built by `init` (one per worker in the parallel case).
pub fn chunks_mut_with<T, S, I, F>(items: &mut [T], size: usize, init: I, f: F)
where
    T: Send,
    S: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    items
        .par_chunks_mut(size)
        .for_each_init(&init, |s, chunk| f(s, chunk));
    #[cfg(not(feature = "parallel"))]
    {
        let mut s = init();
        items.chunks_mut(size).for_each(|chunk| f(&mut s, chunk));
    }
}

/// Elementwise combine: `a[i] = f(a[i], b[i])`.
pub fn zip_mut<T, U, F>(a: &mut [T], b: &[U], f: F)
where
    T: Send + Copy,
    U: Sync + Copy,
    F: Fn(T, U) -> T + Sync + Send,
{
    assert_eq!(a.len(), b.len(), "zip_mut length mismatch");
    #[cfg(feature = "parallel")]
    a.par_iter_mut()
        .zip(b.par_iter())
        .for_each(|(x, y)| *x = f(*x, *y));
    #[cfg(not(feature = "parallel"))]
    a.iter_mut().zip(b.iter()).for_each(|(x, y)| *x = f(*x, *y));
}

/// Build a `Vec` from `f(0), f(1), …, f(n-1)`, preserving index order.
pub fn map_collect<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
