//! Monte Carlo replication runner.
//!
//! Replication `i` always uses seed `base_seed + i`, so adding replications
//! never changes earlier ones. Failed replications are logged and skipped;
//! the run fails once more than 1% of replications have failed.

use log::warn;

use crate::error::{Error, Result};

/// Outcome of a batch of replications, in replication order.
#[derive(Debug, Clone)]
pub struct Replications<R> {
    /// `(index, result)` for every successful replication.
    pub results: Vec<(usize, R)>,
    pub failed: Vec<usize>,
    pub total: usize,
}

impl<R> Replications<R> {
    pub fn values(&self) -> impl Iterator<Item = &R> {
        self.results.iter().map(|(_, r)| r)
    }
}

/// Seed of replication `index`.
pub fn replication_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

/// True when `failed` out of `total` exceeds the 1% tolerance.
pub fn exceeds_failure_threshold(failed: usize, total: usize) -> bool {
    failed * 100 > total
}

/// Runs `n` replications of `f(seed)` sequentially.
pub fn run_replications<R, F>(n: usize, base_seed: u64, mut f: F) -> Result<Replications<R>>
where
    F: FnMut(u64) -> Result<R>,
{
    if n == 0 {
        return Err(Error::Config("number of replications must be at least 1".into()));
    }
    let mut results = Vec::with_capacity(n);
    let mut failed = Vec::new();
    for i in 0..n {
        let seed = replication_seed(base_seed, i);
        match f(seed) {
            Ok(r) => results.push((i, r)),
            Err(e) => {
                warn!("replication {i} (seed {seed}) failed: {e}");
                failed.push(i);
                if exceeds_failure_threshold(failed.len(), n) {
                    return Err(Error::FailureThreshold { failed: failed.len(), total: n });
                }
            }
        }
    }
    Ok(Replications { results, failed, total: n })
}
