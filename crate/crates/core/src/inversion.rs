//! Bayesian inversion, almost-equality and state-dependent channels.

use std::fmt;
use std::sync::Arc;

use serde_json::Value;

use crate::channel::{push_state, Channel};
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::scalar::{NumericMode, Scalar, TAU_NORM};
use crate::space::Space;

/// A Bayesian inverse together with the observations where the
/// off-support convention was used.
#[derive(Clone, Debug, PartialEq)]
pub struct InversionResult<S: Scalar> {
    pub channel: Channel<S>,
    /// Codomain labels with zero predicted mass; their rows are the prior.
    pub zero_support: Vec<String>,
}

impl<S: Scalar> InversionResult<S> {
    pub fn to_json(&self) -> Value {
        let mut v = self.channel.to_json();
        v["zero_support"] = serde_json::json!(self.zero_support);
        v
    }
}

/// Bayesian inverse of `c` with respect to the prior `prior`.
///
/// Row `y` is `c(y|x)·π(x) / (c∘π)(y)`. Rows where `(c∘π)(y) = 0` are set to
/// the prior itself.
pub fn invert<S: Scalar>(c: &Channel<S>, prior: &Dist<S>) -> Result<InversionResult<S>> {
    c.dom().ensure_eq(prior.space(), "Bayesian inversion")?;
    let predicted = push_state(c, prior)?;
    if predicted.support_indices().next().is_none() {
        return Err(Error::EmptyPushforward);
    }
    let x_space = c.dom();
    let mut rows = Vec::with_capacity(c.cod().len());
    let mut zero_support = Vec::new();
    for y in 0..c.cod().len() {
        let evidence = predicted.mass_at(y);
        if evidence.is_zero() {
            zero_support.push(c.cod().element(y).to_string());
            rows.push(prior.clone());
            continue;
        }
        let mut dense = vec![S::zero(); x_space.len()];
        let mut total = S::zero();
        for (x, px) in prior.entries() {
            let m = c.prob(x, y) * px.clone() / evidence.clone();
            total = total + m.clone();
            dense[x] = m;
        }
        if S::MODE == NumericMode::Float {
            if !total.close(&S::one(), TAU_NORM) {
                return Err(Error::NotNormalized {
                    what: format!("posterior row `{}`", c.cod().element(y)),
                    total: total.to_text(),
                });
            }
            for m in &mut dense {
                *m = m.clone() / total.clone();
            }
        } else {
            debug_assert!(total.is_one());
        }
        rows.push(Dist::from_dense_unchecked(x_space, dense));
    }
    Ok(InversionResult {
        channel: Channel::from_rows_unchecked(c.cod(), x_space, rows),
        zero_support,
    })
}

/// The joint state `(id ⊗ c) ∘ copy ∘ π` on `X ⊗ Y`.
pub fn joint<S: Scalar>(c: &Channel<S>, state: &Dist<S>) -> Result<Dist<S>> {
    c.dom().ensure_eq(state.space(), "joint state")?;
    let graph = Channel::copy(c.dom()).then(&Channel::identity(c.dom()).tensor(c))?;
    push_state(&graph, state)
}

/// The joint state `(k ⊗ id) ∘ copy ∘ σ` on `X ⊗ Y`, for `k : Y ⇸ X`.
fn joint_reversed<S: Scalar>(k: &Channel<S>, state: &Dist<S>) -> Result<Dist<S>> {
    let graph = Channel::copy(k.dom()).then(&k.tensor(&Channel::identity(k.dom())))?;
    push_state(&graph, state)
}

/// Whether `k` is a Bayesian inverse of `c` at `prior`: the two joint
/// states on `X ⊗ Y` built from `(c, π)` and `(k, c∘π)` coincide.
pub fn satisfies_bayes_relation<S: Scalar>(
    c: &Channel<S>,
    prior: &Dist<S>,
    k: &Channel<S>,
    tol: f64,
) -> Result<bool> {
    c.dom().ensure_eq(prior.space(), "Bayes relation prior")?;
    c.dom().ensure_eq(k.cod(), "Bayes relation inverse codomain")?;
    c.cod().ensure_eq(k.dom(), "Bayes relation inverse domain")?;
    let forward = joint(c, prior)?;
    let backward = joint_reversed(k, &push_state(c, prior)?)?;
    Ok(forward.approx_eq(&backward, tol))
}

/// `f ∼π g`: equal joint states `(id ⊗ f) ∘ copy ∘ π`.
pub fn almost_equal<S: Scalar>(
    f: &Channel<S>,
    g: &Channel<S>,
    state: &Dist<S>,
    tol: f64,
) -> Result<bool> {
    check_pair(f, g, state)?;
    let by_joint = joint(f, state)?.approx_eq(&joint(g, state)?, tol);
    if S::MODE == NumericMode::Rational {
        debug_assert_eq!(by_joint, agree_on_support(f, g, state, tol)?);
    }
    Ok(by_joint)
}

/// Row-wise characterization of almost-equality: rows agree wherever the
/// state has positive mass.
pub fn agree_on_support<S: Scalar>(
    f: &Channel<S>,
    g: &Channel<S>,
    state: &Dist<S>,
    tol: f64,
) -> Result<bool> {
    check_pair(f, g, state)?;
    Ok(state
        .support_indices()
        .all(|x| f.row(x).approx_eq(g.row(x), tol)))
}

/// Largest row total-variation distance over the support of `state`.
pub fn support_gap<S: Scalar>(f: &Channel<S>, g: &Channel<S>, state: &Dist<S>) -> Result<S> {
    check_pair(f, g, state)?;
    let mut gap = S::zero();
    for x in state.support_indices() {
        gap = S::max_of(gap, f.row(x).total_variation(g.row(x))?);
    }
    Ok(gap)
}

fn check_pair<S: Scalar>(f: &Channel<S>, g: &Channel<S>, state: &Dist<S>) -> Result<()> {
    f.dom().ensure_eq(g.dom(), "almost-equality domains")?;
    f.cod().ensure_eq(g.cod(), "almost-equality codomains")?;
    f.dom().ensure_eq(state.space(), "almost-equality state")
}

type StatFn<S> = dyn Fn(&Dist<S>) -> Result<Channel<S>> + Send + Sync;

/// A state-dependent channel `A ⇸ B` indexed by states on `X`: a morphism of
/// the fibre `Stat(X)`.
///
/// Represented extensionally by a pure function, so equality is only ever
/// checked at sampled index states.
#[derive(Clone)]
pub struct StatChannel<S> {
    index: Space,
    dom: Space,
    cod: Space,
    map: Arc<StatFn<S>>,
}

impl<S: Scalar> StatChannel<S> {
    pub fn new<F>(index: &Space, dom: &Space, cod: &Space, map: F) -> Self
    where
        F: Fn(&Dist<S>) -> Result<Channel<S>> + Send + Sync + 'static,
    {
        StatChannel {
            index: index.clone(),
            dom: dom.clone(),
            cod: cod.clone(),
            map: Arc::new(map),
        }
    }

    /// Ignores the index state.
    pub fn constant(index: &Space, channel: Channel<S>) -> Self {
        let (dom, cod) = (channel.dom().clone(), channel.cod().clone());
        Self::new(index, &dom, &cod, move |_| Ok(channel.clone()))
    }

    /// The identity of `Stat(X)` at `A`: `ρ ↦ id_A`.
    pub fn identity(index: &Space, space: &Space) -> Self {
        Self::constant(index, Channel::identity(space))
    }

    pub fn index_space(&self) -> &Space {
        &self.index
    }

    pub fn dom(&self) -> &Space {
        &self.dom
    }

    pub fn cod(&self) -> &Space {
        &self.cod
    }

    /// Evaluates at an index state, checking the resulting channel's shape.
    pub fn apply(&self, state: &Dist<S>) -> Result<Channel<S>> {
        self.index.ensure_eq(state.space(), "state-dependent channel index")?;
        let c = (self.map)(state)?;
        self.dom.ensure_eq(c.dom(), "state-dependent channel domain")?;
        self.cod.ensure_eq(c.cod(), "state-dependent channel codomain")?;
        Ok(c)
    }

    /// Fibrewise composite: `ρ ↦ next(ρ) ∘ self(ρ)`.
    pub fn then(&self, next: &StatChannel<S>) -> Result<StatChannel<S>> {
        self.index.ensure_eq(&next.index, "state-dependent composition index")?;
        self.cod.ensure_eq(&next.dom, "state-dependent composition")?;
        let (first, second) = (self.clone(), next.clone());
        Ok(Self::new(&self.index, &self.dom, &next.cod, move |rho| {
            first.apply(rho)?.then(&second.apply(rho)?)
        }))
    }

    /// Reindexes along `c : Y ⇸ X`: `ρ ↦ self(c ∘ ρ)`.
    pub fn pullback(&self, c: &Channel<S>) -> Result<StatChannel<S>> {
        self.index.ensure_eq(c.cod(), "state-dependent pullback")?;
        let index = c.dom().clone();
        let (alpha, c) = (self.clone(), c.clone());
        Ok(Self::new(&index, &self.dom, &self.cod, move |rho| {
            alpha.apply(&push_state(&c, rho)?)
        }))
    }
}

/// `c* α`, the pullback of `α` along `c`.
pub fn stat_pullback<S: Scalar>(c: &Channel<S>, alpha: &StatChannel<S>) -> Result<StatChannel<S>> {
    alpha.pullback(c)
}

/// `β ∘ α` in a fibre `Stat(X)`.
pub fn stat_compose<S: Scalar>(
    alpha: &StatChannel<S>,
    beta: &StatChannel<S>,
) -> Result<StatChannel<S>> {
    alpha.then(beta)
}

impl<S> fmt::Debug for StatChannel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "StatChannel[{}]({} -> {})",
            self.index.name(),
            self.dom.name(),
            self.cod.name()
        )
    }
}
