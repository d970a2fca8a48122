//! Benchmark inputs shared by the criterion benches.

use blens_core::random::{random_channel, random_dist, trial_rng};
use blens_core::{Channel, Dist, Scalar, Space};

/// A chain `X ⇸ Y ⇸ Z` of full-support channels with `n` points per space,
/// plus a prior on `X`.
pub fn chain<S: Scalar>(n: usize, seed: u64) -> (Channel<S>, Channel<S>, Dist<S>) {
    let mut rng = trial_rng(seed, 0);
    let x = Space::range("X", n);
    let y = Space::range("Y", n);
    let z = Space::range("Z", n);
    let c = random_channel(&x, &y, &mut rng, false);
    let d = random_channel(&y, &z, &mut rng, false);
    let prior = random_dist(&x, &mut rng, false);
    (c, d, prior)
}
