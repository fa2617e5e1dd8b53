//! Ordered data-parallel helpers.
//!
//! With the `parallel` feature the maps run on the current rayon pool; without it (or
//! after `set_sequential(true)`) they run in order on the calling thread. Output order
//! never depends on scheduling, so reductions done by callers over the returned vectors
//! are bit-for-bit reproducible for any worker count.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Force sequential execution even when the `parallel` feature is enabled.
pub fn set_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

/// True when maps will actually fan out to worker threads.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Map `f` over `items`, preserving order.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            return items.par_iter().map(f).collect();
        }
    }
    items.iter().map(f).collect()
}

/// Map `f` over `0..n`, preserving order.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Split `items` into fixed-size chunks, map each chunk with `f` and concatenate.
///
/// Chunk boundaries depend only on `chunk`, never on the worker count, so a chunk-local
/// warm start inside `f` gives identical results however the chunks are scheduled.
pub fn map_chunks<T, U, F>(items: &[T], chunk: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&[T]) -> Vec<U> + Sync + Send,
{
    let chunk = chunk.max(1);
    let pieces: Vec<&[T]> = items.chunks(chunk).collect();
    let out: Vec<Vec<U>> = map(&pieces, |c| f(c));
    out.into_iter().flatten().collect()
}
