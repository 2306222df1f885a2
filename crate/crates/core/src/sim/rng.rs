//! Per-replica random streams and the parallel replica runner.

use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The stream of replica `replica` under `seed`: independent of the worker
/// that runs it, so results are reproducible for any worker count.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Runs `f(replica, rng)` for replicas 0..n, returning results in replica
/// order. `workers = None` uses the global thread pool.
pub fn run_replicas<T, F>(seed: u64, n: u64, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    let go = || (0..n).into_par_iter().map(|i| f(i, &mut replica_rng(seed, i))).collect::<Result<Vec<T>>>();
    match workers {
        None => go(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(go),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn results_do_not_depend_on_workers() {
        let f = |_, r: &mut ChaCha8Rng| Ok(r.random::<u64>());
        let a = run_replicas(11, 64, Some(1), f).unwrap();
        let b = run_replicas(11, 64, Some(3), f).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }
}
