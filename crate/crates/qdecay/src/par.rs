//! Order-preserving parallel map with a sequential fallback.
//!
//! Built with the default `parallel` feature the maps run on rayon; without
//! it they degrade to plain iterators. Both paths produce outputs in input
//! order, element-for-element identical, so CSV artifacts are byte-identical
//! across builds and thread counts.

use crate::error::{Error, Result};

/// Map `f` over `items`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Map `f` over `items`, preserving order (sequential build).
#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Map `f` over `0..n`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, preserving order (sequential build).
#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Pin the global thread pool to `n` threads (0 = library default).
///
/// Must be called before the first parallel region; later calls fail, which
/// is reported as a validation error. A no-op in sequential builds.
#[cfg(feature = "parallel")]
pub fn set_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::validation(format!("cannot configure {n} threads: {e}")))
}

/// Sequential build: thread counts are accepted and ignored.
#[cfg(not(feature = "parallel"))]
pub fn set_threads(_n: usize) -> Result<()> {
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_slice_preserves_order() {
        let xs: Vec<u64> = (0..10_000).collect();
        let ys = map_slice(&xs, |x| x * 3 + 1);
        for (i, y) in ys.iter().enumerate() {
            assert_eq!(*y, xs[i] * 3 + 1);
        }
    }

    #[test]
    fn map_range_preserves_order() {
        let ys = map_range(1000, |i| i as f64 * 0.5);
        assert_eq!(ys.len(), 1000);
        assert_eq!(ys[999], 999.0 * 0.5);
    }
}
