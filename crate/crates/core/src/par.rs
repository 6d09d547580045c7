// SPDX-License-Identifier: Apache-2.0

//! Execution policy for the data-parallel loops.
//!
//! Every parallel loop in the crate goes through these helpers. Results are
//! always combined in index order, so the parallel and sequential paths
//! produce bit-identical output. Without the `parallel` feature the
//! `Parallel` policy silently runs sequentially.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// `items.iter().map(f).collect()`, in parallel when enabled.
pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Maps over `range`, collecting results in index order.
pub fn map_range<R, F>(exec: Exec, range: Range<usize>, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return range.into_par_iter().map(f).collect();
    }
    let _ = exec;
    range.map(f).collect()
}

/// Splits `0..len` into contiguous chunks of at most `chunk` indices and maps
/// each chunk; results come back in chunk order.
pub fn map_chunks<R, F>(exec: Exec, len: u64, chunk: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<u64>) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    let count = len.div_ceil(chunk) as usize;
    map_range(exec, 0..count, |c| {
        let start = c as u64 * chunk;
        f(start..(start + chunk).min(len))
    })
}
