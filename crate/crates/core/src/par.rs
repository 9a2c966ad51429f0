//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers use rayon unless parallelism has
//! been switched off at runtime with [`set_parallel`]. Results are always
//! returned in input order, so both paths produce identical output.

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enables or disables the rayon path at runtime. Has no effect without the
/// `parallel` feature.
pub fn set_parallel(on: bool) {
    PARALLEL.store(on, Ordering::Relaxed);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// `items.map(f).collect()`, in order.
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// `(0..n).map(f).collect()`, in order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// True when `f(k)` holds for some `k < n`.
pub fn any_range<F>(n: usize, f: F) -> bool
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().any(f);
    }
    (0..n).any(f)
}

/// Maximum of `f(k)` over `k < n` (0.0 for an empty range).
pub fn max_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).reduce(|| 0.0, f64::max);
    }
    (0..n).map(f).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_paths_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let par = map_collect(&xs, |x| x * x);
        set_parallel(false);
        let seq = map_collect(&xs, |x| x * x);
        let seq_any = any_range(1000, |k| k == 999);
        set_parallel(true);
        assert_eq!(par, seq);
        assert!(seq_any && any_range(1000, |k| k == 999));
        assert_eq!(max_range(10, |k| k as f64), 9.0);
    }
}
