//! Sample-parallel evaluation keyed by stream index.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::Result;

/// Evaluate `f(stream)` for every stream in `streams` on the current rayon
/// pool. Results come back in stream order, so any aggregation over them is
/// independent of the worker count.
pub fn map_streams<T, F>(streams: Range<u64>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    streams.into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_under_any_pool_size() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| map_streams(0..500, |s| Ok(crate::rng::derive_seed(3, s))).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn first_error_propagates() {
        let r: Result<Vec<u64>> = map_streams(0..10, |s| {
            if s == 7 {
                Err(crate::Error::ZeroVariance)
            } else {
                Ok(s)
            }
        });
        assert!(r.is_err());
    }
}
