//! Deterministic parallel reductions.
//!
//! Work is cut into fixed-size chunks, chunks are evaluated in parallel, and
//! partial results are combined sequentially in chunk order. The chunking
//! never depends on the number of worker threads, so floating-point results
//! are bit-identical whatever pool they run on.

use std::ops::Range;

use rayon::prelude::*;

/// Environment variable that overrides the default worker count.
pub const THREADS_ENV: &str = "HALFFLAT_THREADS";

/// Evaluate `f` on consecutive chunks of `0..n` and return the per-chunk
/// results in order.
pub fn chunked<T, F>(n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| f(c * chunk..((c + 1) * chunk).min(n)))
        .collect()
}

/// Run `f` inside a dedicated pool. `None` uses `HALFFLAT_THREADS` if set,
/// otherwise rayon's default.
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let n = threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|s| s.parse().ok()));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n {
        builder = builder.num_threads(n.max(1));
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
