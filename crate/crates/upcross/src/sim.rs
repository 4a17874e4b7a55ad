//! Replicate fan-out with a determinism guarantee.
//!
//! Replicates are embarrassingly parallel: each one derives its own seed
//! from the master seed and its index, so results depend only on the index.
//! Collection is positional (replicate `r` lands in slot `r`), which makes
//! the output byte-identical no matter how many workers ran or how the
//! scheduler interleaved them.

use rayon::prelude::*;

/// Run `f` for every replicate index and collect results in index order.
///
/// `workers`: `Some(1)` runs inline on the current thread, `Some(w)` uses
/// a dedicated pool of `w` threads, `None` uses the global rayon pool.
pub(crate) fn map_replicates<T, F>(replicates: u64, workers: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match workers {
        Some(1) => (0..replicates).map(f).collect(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("spawn worker pool")
            .install(|| (0..replicates).into_par_iter().map(f).collect()),
        None => (0..replicates).into_par_iter().map(f).collect(),
    }
}
