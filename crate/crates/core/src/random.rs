//! Seeded generators for randomized trials.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, trial)`, so
//! results do not depend on the order in which trials run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::Channel;
use crate::density::{DensityChannel, Effect, Measure};
use crate::dist::Dist;
use crate::scalar::Scalar;
use crate::space::Space;

/// Smallest and largest integer weight before normalization. With weights in
/// `4..=16` every mass of an `n`-point full-support draw is at least
/// `1/(4n)`.
const MIN_WEIGHT: i64 = 4;
const MAX_WEIGHT: i64 = 16;

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A dimension in `2..=max_dim`.
pub fn random_dim(rng: &mut impl Rng, max_dim: usize) -> usize {
    rng.gen_range(2..=max_dim.max(2))
}

/// Integer weights in `4..=16`; with `sparse`, roughly half are zeroed but
/// at least one survives.
fn random_weights(rng: &mut impl Rng, n: usize, sparse: bool) -> Vec<i64> {
    let mut w: Vec<i64> = (0..n).map(|_| rng.gen_range(MIN_WEIGHT..=MAX_WEIGHT)).collect();
    if sparse {
        let keep = rng.gen_range(0..n);
        for (i, wi) in w.iter_mut().enumerate() {
            if i != keep && rng.gen_bool(0.5) {
                *wi = 0;
            }
        }
    }
    w
}

fn normalize<S: Scalar>(weights: &[i64]) -> Vec<S> {
    let total: i64 = weights.iter().sum();
    weights.iter().map(|&w| S::from_ratio(w, total)).collect()
}

/// A random distribution, full-support unless `sparse`.
pub fn random_dist<S: Scalar>(space: &Space, rng: &mut impl Rng, sparse: bool) -> Dist<S> {
    let w = random_weights(rng, space.len(), sparse);
    Dist::from_dense(space, normalize(&w)).expect("normalized weights")
}

/// A random channel with independently drawn rows.
pub fn random_channel<S: Scalar>(
    dom: &Space,
    cod: &Space,
    rng: &mut impl Rng,
    sparse: bool,
) -> Channel<S> {
    let rows = (0..dom.len())
        .map(|_| random_dist(cod, rng, sparse))
        .collect();
    Channel::from_rows(dom, cod, rows).expect("rows on the codomain")
}

/// A random deterministic channel (a lifted function).
pub fn random_deterministic<S: Scalar>(dom: &Space, cod: &Space, rng: &mut impl Rng) -> Channel<S> {
    let targets: Vec<usize> = (0..dom.len()).map(|_| rng.gen_range(0..cod.len())).collect();
    Channel::from_index_map(dom, cod, |x| targets[x])
}

/// A random channel that is not deterministic: at least one row has two
/// points of support.
pub fn random_nondeterministic<S: Scalar>(dom: &Space, cod: &Space, rng: &mut impl Rng) -> Channel<S> {
    random_channel(dom, cod, rng, false)
}

/// A random positive measure with integer weights in `1..=4`; with `sparse`
/// some weights are zero.
pub fn random_measure<S: Scalar>(space: &Space, rng: &mut impl Rng, sparse: bool) -> Measure<S> {
    let mut w: Vec<i64> = (0..space.len()).map(|_| rng.gen_range(1..=4)).collect();
    if sparse {
        let keep = rng.gen_range(0..space.len());
        for (i, wi) in w.iter_mut().enumerate() {
            if i != keep && rng.gen_bool(0.5) {
                *wi = 0;
            }
        }
    }
    Measure::from_dense(space, w.into_iter().map(|v| S::from_ratio(v, 1)).collect())
        .expect("at least one positive weight")
}

/// A random effect with small positive rational values.
pub fn random_effect<S: Scalar>(space: &Space, rng: &mut impl Rng) -> Effect<S> {
    Effect::from_fn(space, |_| S::from_ratio(rng.gen_range(1..=12), rng.gen_range(1..=4)))
        .expect("positive values")
}

/// A random density-represented channel `dom ⇸ cod`.
///
/// The channel is drawn first with support inside the base measure's
/// support; the density is then `c(y|x)/μ(y)` on `supp μ` and arbitrary
/// positive junk off it, which the representation must ignore.
pub fn random_density_channel<S: Scalar>(
    dom: &Space,
    cod: &Space,
    rng: &mut impl Rng,
    sparse_base: bool,
) -> DensityChannel<S> {
    let base = random_measure::<S>(cod, rng, sparse_base);
    let support: Vec<usize> = base.support_indices().collect();
    let xy = Space::product(dom, cod);
    let mut values = vec![S::zero(); xy.len()];
    for x in 0..dom.len() {
        let w = random_weights(rng, support.len(), false);
        let total: i64 = w.iter().sum();
        for (k, &y) in support.iter().enumerate() {
            values[xy.pair_index(x, y)] = S::from_ratio(w[k], total) / base.weight_at(y);
        }
        for y in (0..cod.len()).filter(|y| !base.in_support(*y)) {
            values[xy.pair_index(x, y)] = S::from_ratio(rng.gen_range(1..=9), 1);
        }
    }
    let density = Effect::from_dense(&xy, values).expect("nonnegative density");
    DensityChannel::new(density, base).expect("density over dom ⊗ cod")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn same_seed_same_draws() {
        let x = Space::range("X", 5);
        let a: Dist<Rational> = random_dist(&x, &mut trial_rng(42, 7), false);
        let b: Dist<Rational> = random_dist(&x, &mut trial_rng(42, 7), false);
        let c: Dist<Rational> = random_dist(&x, &mut trial_rng(42, 8), false);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn full_support_respects_floor() {
        for trial in 0..50 {
            let mut rng = trial_rng(1, trial);
            let n = random_dim(&mut rng, 6);
            let x = Space::range("X", n);
            let d: Dist<Rational> = random_dist(&x, &mut rng, false);
            assert!(d.has_full_support());
            let floor = Rational::from_ratio(1, 4 * n as i64);
            assert!(d.entries().all(|(_, m)| *m >= floor));
        }
    }

    #[test]
    fn sparse_draws_keep_some_mass() {
        let x = Space::range("X", 6);
        let mut partial = 0;
        for trial in 0..50 {
            let d: Dist<Rational> = random_dist(&x, &mut trial_rng(3, trial), true);
            assert!(d.support_indices().next().is_some());
            partial += usize::from(!d.has_full_support());
        }
        assert!(partial > 0);
    }

    #[test]
    fn generated_channels_are_stochastic() {
        let x = Space::range("X", 4);
        let y = Space::range("Y", 3);
        let mut rng = trial_rng(9, 0);
        let c: Channel<Rational> = random_channel(&x, &y, &mut rng, false);
        let rebuilt = Channel::from_rows(&x, &y, c.rows().to_vec()).unwrap();
        assert_eq!(rebuilt, c);
        let d: Channel<Rational> = random_deterministic(&x, &y, &mut rng);
        assert!(d.is_deterministic(0.0));
        let dc: DensityChannel<Rational> = random_density_channel(&x, &y, &mut rng, true);
        assert!(dc.realize().is_ok());
    }
}
