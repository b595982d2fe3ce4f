//! Data-parallel helpers. With the `parallel` feature these fan out over
//! rayon's pool; without it they run as plain sequential loops. Each output
//! element is produced by exactly one closure call, so results do not depend
//! on scheduling.

/// Problems smaller than this run sequentially even when `parallel` is on.
pub const PAR_THRESHOLD: usize = 512;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Collects `f(i)` for `i in 0..len`.
pub fn map_indices<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if len >= PAR_THRESHOLD {
            return (0..len).into_par_iter().map(f).collect();
        }
    }
    (0..len).map(f).collect()
}

/// Overwrites `out[i] = f(i)`.
pub fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if out.len() >= PAR_THRESHOLD {
            out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
            return;
        }
    }
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

/// Like [`map_indices`] but always fans out when `parallel` is on; meant for
/// coarse tasks such as independent cells of a parameter sweep.
pub fn map_tasks<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    let tasks = (0..len).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    let tasks = (0..len).map(f).collect();
    tasks
}
