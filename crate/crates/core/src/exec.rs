//! Execution policy for the data-parallel inner loops.
//!
//! Every parallel kernel here splits work into fixed-size chunks and combines
//! partial results in chunk order, so results are bitwise identical for any
//! thread count and for the sequential fallback.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows per work unit. Reductions are always formed over this chunking.
pub const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExecPolicy {
    Sequential,
    #[default]
    Parallel,
}

impl ExecPolicy {
    /// True when the policy will actually fan out to the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }

    /// Calls `op(offset, chunk)` on consecutive `CHUNK`-sized pieces of `out`.
    pub fn for_each_chunk_mut<F>(self, out: &mut [f64], op: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && out.len() > CHUNK {
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(i, chunk)| op(i * CHUNK, chunk));
            return;
        }
        for (i, chunk) in out.chunks_mut(CHUNK).enumerate() {
            op(i * CHUNK, chunk);
        }
    }

    /// Sum of `term(i)` for `i in 0..n`, reduced chunkwise in a fixed order.
    pub fn sum<F>(self, n: usize, term: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let chunk_sum = |c: usize| -> f64 {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi).map(&term).sum()
        };
        let chunks = n.div_ceil(CHUNK);
        #[cfg(feature = "parallel")]
        if self.is_parallel() && chunks > 1 {
            let partial: Vec<f64> = (0..chunks).into_par_iter().map(chunk_sum).collect();
            return partial.iter().sum();
        }
        (0..chunks).map(chunk_sum).sum()
    }

    pub fn dot(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.sum(a.len(), |i| a[i] * b[i])
    }

    /// Order-preserving map over `0..n`.
    pub fn map<T, F>(self, n: usize, op: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && n > 1 {
            return (0..n).into_par_iter().map(op).collect();
        }
        (0..n).map(op).collect()
    }
}
