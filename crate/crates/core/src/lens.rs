//! Bayesian lenses in Grothendieck form.
//!
//! A lens `(X, A) ↛ (Y, B)` pairs a forward channel `X ⇸ Y` with a backward
//! channel `B ⇸ A` that depends on a state of `X`. Lenses compose by
//! `⟨c, c†⟩ ≬ ⟨d, d†⟩ = ⟨d ∘ c, π ↦ c†(π) ∘ d†(c ∘ π)⟩`, and the exact lens of
//! a composite agrees with the composite of exact lenses up to
//! almost-equality.

use serde::Serialize;
use serde_json::Value;

use crate::channel::{push_state, Channel};
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::harness::RunConfig;
use crate::inversion::{almost_equal, invert, support_gap, StatChannel};
use crate::random::{random_deterministic, random_dim, random_dist, random_nondeterministic, trial_rng};
use crate::scalar::Scalar;
use crate::space::Space;

/// Total-variation threshold for reporting a law violation from a search.
pub const COUNTEREXAMPLE_GAP: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct BayesLens<S: Scalar> {
    forward: Channel<S>,
    backward: StatChannel<S>,
}

impl<S: Scalar> BayesLens<S> {
    /// Pairs a forward channel `X ⇸ Y` with a backward channel indexed by `X`.
    pub fn new(forward: Channel<S>, backward: StatChannel<S>) -> Result<Self> {
        backward
            .index_space()
            .ensure_eq(forward.dom(), "lens backward index")?;
        Ok(BayesLens { forward, backward })
    }

    pub fn forward(&self) -> &Channel<S> {
        &self.forward
    }

    pub fn backward(&self) -> &StatChannel<S> {
        &self.backward
    }

    /// The backward channel at prior `state`.
    pub fn update(&self, state: &Dist<S>) -> Result<Channel<S>> {
        self.backward.apply(state)
    }

    /// `self ≬ next`: forward `next.forward ∘ self.forward`, backward
    /// `π ↦ self.backward(π) ∘ next.backward(self.forward ∘ π)`.
    pub fn then(&self, next: &BayesLens<S>) -> Result<BayesLens<S>> {
        let forward = self.forward.then(&next.forward)?;
        next.backward
            .cod()
            .ensure_eq(self.backward.dom(), "lens backward chaining")?;
        let backward = next.backward.pullback(&self.forward)?.then(&self.backward)?;
        BayesLens::new(forward, backward)
    }
}

/// The lens `⟨c, c†⟩` whose backward map is exact Bayesian inversion.
pub fn exact_lens<S: Scalar>(c: &Channel<S>) -> BayesLens<S> {
    let forward = c.clone();
    let inverse_of = c.clone();
    let backward = StatChannel::new(c.dom(), c.cod(), c.dom(), move |prior| {
        Ok(invert(&inverse_of, prior)?.channel)
    });
    BayesLens { forward, backward }
}

/// `⟨id_X, ρ ↦ id_A⟩`.
pub fn lens_identity<S: Scalar>(x: &Space, a: &Space) -> BayesLens<S> {
    BayesLens {
        forward: Channel::identity(x),
        backward: StatChannel::identity(x, a),
    }
}

pub fn lens_compose<S: Scalar>(first: &BayesLens<S>, second: &BayesLens<S>) -> Result<BayesLens<S>> {
    first.then(second)
}

/// Outcome of comparing `(d ∘ c)†_π` with the lens composite at one prior.
#[derive(Clone, Debug)]
pub struct CompositionCheck<S: Scalar> {
    pub holds: bool,
    /// Largest row total-variation gap over the support of `d ∘ c ∘ π`.
    pub max_gap: S,
    /// Inverse of the composite channel.
    pub direct: Channel<S>,
    /// Lens composite of the factors' inverses.
    pub lens: Channel<S>,
}

/// Checks that `invert(d ∘ c, π)` is almost-equal, with respect to
/// `d ∘ c ∘ π`, to `c†_π ∘ d†_{c∘π}`.
pub fn verify_composition<S: Scalar>(
    c: &Channel<S>,
    d: &Channel<S>,
    prior: &Dist<S>,
    tol: f64,
) -> Result<CompositionCheck<S>> {
    let composite = c.then(d)?;
    let direct = invert(&composite, prior)?.channel;
    let lens = exact_lens(c).then(&exact_lens(d))?.update(prior)?;
    let predicted = push_state(&composite, prior)?;
    Ok(CompositionCheck {
        holds: almost_equal(&direct, &lens, &predicted, tol)?,
        max_gap: support_gap(&direct, &lens, &predicted)?,
        direct,
        lens,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Law {
    GetPut,
    PutGet,
    PutPut,
}

/// Inputs and both sides of a failed law check.
#[derive(Clone, Debug)]
pub struct LawWitness<S: Scalar> {
    pub inputs: Value,
    pub lhs: Dist<S>,
    pub rhs: Dist<S>,
    pub gap: S,
}

#[derive(Clone, Debug)]
pub struct LawReport<S: Scalar> {
    pub law: Law,
    pub holds: bool,
    pub gap: S,
    pub witness: Option<LawWitness<S>>,
}

impl<S: Scalar> LawReport<S> {
    fn compare(law: Law, lhs: Dist<S>, rhs: Dist<S>, inputs: Value, tol: f64) -> Result<Self> {
        let gap = lhs.total_variation(&rhs)?;
        let holds = lhs.approx_eq(&rhs, tol);
        let witness = (!holds).then(|| LawWitness {
            inputs,
            lhs,
            rhs,
            gap: gap.clone(),
        });
        Ok(LawReport {
            law,
            holds,
            gap,
            witness,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut v = serde_json::json!({
            "law": self.law,
            "holds": self.holds,
            "gap": self.gap.to_json(),
        });
        if let Some(w) = &self.witness {
            v["witness"] = serde_json::json!({
                "inputs": w.inputs,
                "lhs": w.lhs.to_json(),
                "rhs": w.rhs.to_json(),
                "gap": w.gap.to_json(),
            });
        }
        v
    }
}

/// State-level GetPut: `c†_π ∘ (c ∘ π) = π`.
pub fn check_getput<S: Scalar>(c: &Channel<S>, prior: &Dist<S>, tol: f64) -> Result<LawReport<S>> {
    let predicted = push_state(c, prior)?;
    let inverse = invert(c, prior)?.channel;
    let recovered = push_state(&inverse, &predicted)?;
    let inputs = serde_json::json!({ "channel": c.to_json(), "prior": prior.to_json() });
    LawReport::compare(Law::GetPut, recovered, prior.clone(), inputs, tol)
}

/// PutGet at one observation: `c ∘ c†_π ∘ obs = obs`.
pub fn check_putget_at<S: Scalar>(
    c: &Channel<S>,
    prior: &Dist<S>,
    observation: &Dist<S>,
    tol: f64,
) -> Result<LawReport<S>> {
    c.cod().ensure_eq(observation.space(), "PutGet observation")?;
    let inverse = invert(c, prior)?.channel;
    let posterior = push_state(&inverse, observation)?;
    let predicted = push_state(c, &posterior)?;
    let inputs = serde_json::json!({
        "channel": c.to_json(),
        "prior": prior.to_json(),
        "observation": observation.to_json(),
    });
    LawReport::compare(Law::PutGet, predicted, observation.clone(), inputs, tol)
}

/// PutPut for observations `y1` then `y2` (indices into `cod c`): updating
/// on `y1` and then on `y2` against updating on `y2` alone.
///
/// Returns `None` when `y2` has zero predicted mass after the first update,
/// where the second posterior is only fixed by convention.
pub fn check_putput_at<S: Scalar>(
    c: &Channel<S>,
    prior: &Dist<S>,
    y1: usize,
    y2: usize,
    tol: f64,
) -> Result<Option<LawReport<S>>> {
    let once = invert(c, prior)?.channel;
    let intermediate = once.row(y1).clone();
    let second = invert(c, &intermediate)?;
    if second
        .zero_support
        .iter()
        .any(|label| label == c.cod().element(y2))
    {
        return Ok(None);
    }
    let inputs = serde_json::json!({
        "channel": c.to_json(),
        "prior": prior.to_json(),
        "first": c.cod().element(y1),
        "second": c.cod().element(y2),
    });
    LawReport::compare(
        Law::PutPut,
        second.channel.row(y2).clone(),
        once.row(y2).clone(),
        inputs,
        tol,
    )
    .map(Some)
}

/// PutPut over every observation pair; reports the widest violation.
pub fn check_putput<S: Scalar>(c: &Channel<S>, prior: &Dist<S>, tol: f64) -> Result<LawReport<S>> {
    let mut worst: Option<LawReport<S>> = None;
    for y1 in 0..c.cod().len() {
        for y2 in 0..c.cod().len() {
            if let Some(r) = check_putput_at(c, prior, y1, y2, tol)? {
                if worst.as_ref().is_none_or(|w| r.gap > w.gap) {
                    worst = Some(r);
                }
            }
        }
    }
    worst.ok_or(Error::EmptyPushforward)
}

/// Result of a randomized counterexample search.
#[derive(Clone, Debug)]
pub struct SearchOutcome<S: Scalar> {
    pub report: LawReport<S>,
    /// Index of the trial that produced the witness.
    pub trial: u64,
}

fn search_instance<S: Scalar>(
    config: &RunConfig,
    trial: u64,
) -> (Channel<S>, Dist<S>, rand_chacha::ChaCha8Rng) {
    let mut rng = trial_rng(config.seed, trial);
    let x = Space::range("X", random_dim(&mut rng, config.max_dim));
    let y = Space::range("Y", random_dim(&mut rng, config.max_dim));
    let c = if config.deterministic {
        random_deterministic(&x, &y, &mut rng)
    } else {
        random_nondeterministic(&x, &y, &mut rng)
    };
    let prior = random_dist(&x, &mut rng, false);
    (c, prior, rng)
}

fn found<S: Scalar>(report: &LawReport<S>) -> bool {
    !report.holds && report.gap.to_f64() > COUNTEREXAMPLE_GAP
}

/// Searches random `(c, π, y1, y2)` for an instance where updating twice
/// differs from updating once by more than [`COUNTEREXAMPLE_GAP`].
pub fn putput_counterexample<S: Scalar>(config: &RunConfig) -> Result<SearchOutcome<S>> {
    use rand::Rng;
    for trial in 0..config.trials {
        let (c, prior, mut rng) = search_instance::<S>(config, trial);
        let y1 = rng.gen_range(0..c.cod().len());
        let y2 = rng.gen_range(0..c.cod().len());
        if let Some(report) = check_putput_at(&c, &prior, y1, y2, config.tolerance)? {
            if found(&report) {
                return Ok(SearchOutcome { report, trial });
            }
        }
    }
    Err(Error::NotFound {
        trials: config.trials,
    })
}

/// Searches random `(c, π, y)` for a PutGet violation at the Dirac
/// observation `y`, with gap above [`COUNTEREXAMPLE_GAP`].
pub fn putget_counterexample<S: Scalar>(config: &RunConfig) -> Result<SearchOutcome<S>> {
    use rand::Rng;
    for trial in 0..config.trials {
        let (c, prior, mut rng) = search_instance::<S>(config, trial);
        let y = rng.gen_range(0..c.cod().len());
        let obs = Dist::dirac_at(c.cod(), y);
        let report = check_putget_at(&c, &prior, &obs, config.tolerance)?;
        if found(&report) {
            return Ok(SearchOutcome { report, trial });
        }
    }
    Err(Error::NotFound {
        trials: config.trials,
    })
}
