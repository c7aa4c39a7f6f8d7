//! Replication-level parallelism with a sequential fallback.
//!
//! Experiment harnesses express their outer loops as index maps over
//! `0..count`. With the `parallel` feature (default) the map runs on rayon's
//! current thread pool; without it, the same closure runs in a plain loop.
//! Because every replication derives its own RNG stream from its index, the
//! two paths produce identical results — the feature only changes wall-clock
//! time. [`map_indexed_sequential`] is always available so benchmarks can
//! compare the two schedules within one build.

/// Map `f` over `0..count`, in parallel when the `parallel` feature is on.
/// Results are returned in index order regardless of schedule.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

/// Sequential build of [`map_indexed`].
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_sequential(count, f)
}

/// The sequential schedule, unconditionally available (used by the
/// throughput benchmark as the baseline).
pub fn map_indexed_sequential<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}
