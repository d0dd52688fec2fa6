//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (the default) work fans out over rayon;
//! without it the same chunks run on one thread. All callers split work
//! into fixed-size chunks and combine chunk results in chunk order, so
//! float accumulation order — and therefore every artifact byte — is
//! identical across thread counts and across the two builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use std::ops::Range;

/// Map `f` over `len` items split into `chunk`-sized ranges, preserving
/// chunk order in the output.
pub(crate) fn map_chunks<T, F>(len: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync,
{
    assert!(chunk > 0);
    let n_chunks = len.div_ceil(chunk);
    let range_of = |i: usize| {
        let start = i * chunk;
        start..(start + chunk).min(len)
    };

    #[cfg(feature = "parallel")]
    {
        (0..n_chunks).into_par_iter().map(|i| f(range_of(i))).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_chunks).map(range_of).map(f).collect()
    }
}

/// Cap the worker count for subsequent parallel sections. Call once, before
/// any parallel work; later calls are ignored. A no-op in sequential builds.
pub fn set_max_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
    }
}

/// True when this build fans work out over a thread pool.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_results_preserve_order() {
        let out = map_chunks(10, 3, |r| r.collect::<Vec<_>>());
        assert_eq!(out.len(), 4);
        assert_eq!(out.concat(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn empty_input_yields_no_chunks() {
        let out = map_chunks(0, 4, |r| r.len());
        assert!(out.is_empty());
    }

    #[test]
    fn chunked_sum_is_fixed_by_chunk_size() {
        // same chunking => same grouping of float additions
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let sum = |_: ()| -> f64 {
            map_chunks(xs.len(), 128, |r| xs[r].iter().sum::<f64>())
                .into_iter()
                .sum()
        };
        assert_eq!(sum(()).to_bits(), sum(()).to_bits());
    }
}
