//! Ordered map over indices, parallel when the `parallel` feature is on.
//!
//! Results are always returned in index order so that downstream scatter
//! loops see the same sequence regardless of thread count.

use alloc::vec::Vec;

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Fill `out[i] = f(i)`, splitting rows across threads when enabled.
#[cfg(feature = "parallel")]
pub fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    use rayon::prelude::*;
    if out.len() < 4096 {
        out.iter_mut().enumerate().for_each(|(i, y)| *y = f(i));
    } else {
        out.par_iter_mut().enumerate().with_min_len(1024).for_each(|(i, y)| *y = f(i));
    }
}

#[cfg(not(feature = "parallel"))]
pub fn fill_indexed<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64,
{
    out.iter_mut().enumerate().for_each(|(i, y)| *y = f(i));
}
