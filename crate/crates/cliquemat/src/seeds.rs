//! Deterministic seed derivation.
//!
//! Every random draw in the library flows from one 64-bit root seed through
//! ChaCha streams, so restarts, epochs and replications are independently
//! seeded yet fully reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// What a derived stream is used for. The discriminant is folded into the
/// stream id so different uses never collide.
#[derive(Clone, Copy, Debug)]
pub enum SeedDomain {
    /// Initial `theta` draw of a solver restart.
    SolverInit = 1,
    /// Per-epoch coordinate update order.
    EpochOrder = 2,
    /// Per-replication draws of the covariance harness.
    Replication = 3,
    /// Free-entry jitter when initializing a covariance fit.
    FitInit = 4,
}

/// Splits one root seed into independent, addressable streams.
#[derive(Clone, Copy, Debug)]
pub struct SeedPlan {
    root: u64,
}

impl SeedPlan {
    pub fn new(root: u64) -> Self {
        SeedPlan { root }
    }

    /// RNG for `(domain, index)`. Indices must stay below 2^56.
    pub fn rng(&self, domain: SeedDomain, index: u64) -> ChaCha12Rng {
        debug_assert!(index < (1 << 56));
        let mut rng = ChaCha12Rng::seed_from_u64(self.root);
        rng.set_stream(((domain as u64) << 56) | index);
        rng
    }
}

/// Packs a restart id and an epoch counter into one stream index.
pub(crate) fn restart_epoch_index(restart: u64, epoch: u64) -> u64 {
    debug_assert!(restart < (1 << 24) && epoch < (1 << 32));
    (restart << 32) | epoch
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let plan = SeedPlan::new(7);
        let a: f64 = plan.rng(SeedDomain::SolverInit, 0).random();
        let b: f64 = plan.rng(SeedDomain::SolverInit, 0).random();
        let c: f64 = plan.rng(SeedDomain::SolverInit, 1).random();
        let d: f64 = plan.rng(SeedDomain::EpochOrder, 0).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
