//! Channels represented by density functions against finite base measures.
//!
//! A [`DensityChannel`] pairs an effect `p` on `X ⊗ Y` with a base measure
//! `μ` on `Y`; the channel it represents has `c(y|x) = p(x,y)·μ(y)`. Bayesian
//! inversion then only needs a `μ`-almost-inverse of the evidence effect.

use std::collections::BTreeMap;

use serde_json::{Map, Value};

use crate::channel::{push_state, Channel};
use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::scalar::{NumericMode, Scalar, TAU_NORM};
use crate::space::Space;

/// A finite nonnegative measure; no normalization is required.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure<S> {
    space: Space,
    weights: BTreeMap<usize, S>,
}

/// A nonnegative function on a space (an effect `X ⇸ I`).
#[derive(Clone, Debug, PartialEq)]
pub struct Effect<S> {
    space: Space,
    values: BTreeMap<usize, S>,
}

fn collect_nonnegative<S: Scalar>(
    space: &Space,
    dense: Vec<S>,
    what: &str,
) -> Result<BTreeMap<usize, S>> {
    if dense.len() != space.len() {
        return Err(Error::mismatch("weight vector length", space.len(), dense.len()));
    }
    let mut out = BTreeMap::new();
    for (i, v) in dense.into_iter().enumerate() {
        if v.is_negative() {
            return Err(Error::InvalidWeights(format!(
                "{what} is negative at `{}`",
                space.element(i)
            )));
        }
        if S::MODE == NumericMode::Float && !v.to_f64().is_finite() {
            return Err(Error::InvalidWeights(format!(
                "{what} is not finite at `{}`",
                space.element(i)
            )));
        }
        if !v.is_zero() {
            out.insert(i, v);
        }
    }
    Ok(out)
}

fn dense_from_labels<S: Scalar, L: AsRef<str>>(
    space: &Space,
    entries: impl IntoIterator<Item = (L, S)>,
) -> Result<Vec<S>> {
    let mut dense = vec![S::zero(); space.len()];
    for (label, v) in entries {
        let i = space.require(label.as_ref())?;
        dense[i] = dense[i].clone() + v;
    }
    Ok(dense)
}

fn weights_json<S: Scalar>(space: &Space, values: &BTreeMap<usize, S>) -> Value {
    let map: Map<String, Value> = values
        .iter()
        .map(|(&i, v)| (space.element(i).to_string(), v.to_json()))
        .collect();
    Value::Object(map)
}

fn weights_from_json<S: Scalar>(value: &Value, space: &Space, key: &str) -> Result<Vec<S>> {
    let name = value
        .get("space")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Json("missing \"space\" name".into()))?;
    if name != space.name() {
        return Err(Error::mismatch("weights import", space.name(), name));
    }
    let map = value
        .get(key)
        .and_then(Value::as_object)
        .ok_or_else(|| Error::Json(format!("missing \"{key}\" object")))?;
    let entries = map
        .iter()
        .map(|(k, v)| Ok((k.as_str(), S::from_json(v)?)))
        .collect::<Result<Vec<_>>>()?;
    dense_from_labels(space, entries)
}

impl<S: Scalar> Measure<S> {
    pub fn new<L: AsRef<str>>(space: &Space, weights: impl IntoIterator<Item = (L, S)>) -> Result<Self> {
        Self::from_dense(space, dense_from_labels(space, weights)?)
    }

    pub fn from_dense(space: &Space, dense: Vec<S>) -> Result<Self> {
        let weights = collect_nonnegative(space, dense, "measure weight")?;
        if weights.is_empty() {
            return Err(Error::InvalidWeights(format!(
                "measure on {} has no positive weight",
                space.name()
            )));
        }
        Ok(Measure {
            space: space.clone(),
            weights,
        })
    }

    /// Weight 1 on every element.
    pub fn counting(space: &Space) -> Self {
        Self::from_dense(space, vec![S::one(); space.len()]).expect("counting measure is positive")
    }

    pub fn from_dist(state: &Dist<S>) -> Self {
        Self::from_dense(state.space(), state.to_dense()).expect("a distribution has positive mass")
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn weight_at(&self, i: usize) -> S {
        self.weights.get(&i).cloned().unwrap_or_else(S::zero)
    }

    pub fn support_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.keys().copied()
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.weights.contains_key(&i)
    }

    /// The probability measure with the same support.
    pub fn normalized(&self) -> Dist<S> {
        let total = self.weights.values().fold(S::zero(), |a, w| a + w.clone());
        let dense = (0..self.space.len())
            .map(|i| self.weight_at(i) / total.clone())
            .collect();
        Dist::from_dense_unchecked(&self.space, dense)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "space": self.space.name(),
            "weights": weights_json(&self.space, &self.weights),
        })
    }

    pub fn from_json(value: &Value, space: &Space) -> Result<Self> {
        Self::from_dense(space, weights_from_json(value, space, "weights")?)
    }
}

impl<S: Scalar> Effect<S> {
    pub fn new<L: AsRef<str>>(space: &Space, values: impl IntoIterator<Item = (L, S)>) -> Result<Self> {
        Self::from_dense(space, dense_from_labels(space, values)?)
    }

    pub fn from_dense(space: &Space, dense: Vec<S>) -> Result<Self> {
        Ok(Effect {
            space: space.clone(),
            values: collect_nonnegative(space, dense, "effect value")?,
        })
    }

    pub fn from_fn(space: &Space, f: impl FnMut(usize) -> S) -> Result<Self> {
        Self::from_dense(space, (0..space.len()).map(f).collect())
    }

    /// The constant effect 1.
    pub fn ones(space: &Space) -> Self {
        Self::from_dense(space, vec![S::one(); space.len()]).expect("ones are nonnegative")
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn value_at(&self, i: usize) -> S {
        self.values.get(&i).cloned().unwrap_or_else(S::zero)
    }

    /// Value at `(i, j)` of an effect on a product space.
    pub fn pair_value(&self, i: usize, j: usize) -> S {
        self.value_at(self.space.pair_index(i, j))
    }

    pub fn to_dense(&self) -> Vec<S> {
        (0..self.space.len()).map(|i| self.value_at(i)).collect()
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "space": self.space.name(),
            "values": weights_json(&self.space, &self.values),
        })
    }

    pub fn from_json(value: &Value, space: &Space) -> Result<Self> {
        Self::from_dense(space, weights_from_json(value, space, "values")?)
    }
}

/// `e1 ∼μ e2` for effects: `e1(y)·μ(y) = e2(y)·μ(y)` everywhere.
pub fn effects_almost_equal<S: Scalar>(
    a: &Effect<S>,
    b: &Effect<S>,
    base: &Measure<S>,
    tol: f64,
) -> Result<bool> {
    a.space.ensure_eq(&b.space, "effect almost-equality")?;
    a.space.ensure_eq(&base.space, "effect almost-equality base")?;
    Ok(base
        .support_indices()
        .all(|y| (a.value_at(y) * base.weight_at(y)).close(&(b.value_at(y) * base.weight_at(y)), tol)))
}

/// `μ`-almost-inverse of `e`: `1/e(y)` where `e(y)·μ(y) > 0`, zero elsewhere.
pub fn almost_inverse<S: Scalar>(e: &Effect<S>, base: &Measure<S>) -> Result<Effect<S>> {
    e.space.ensure_eq(&base.space, "almost-inverse")?;
    Effect::from_fn(&e.space, |y| {
        let v = e.value_at(y);
        if base.in_support(y) && !v.is_zero() {
            S::one() / v
        } else {
            S::zero()
        }
    })
}

/// Whether `inverse` satisfies `e(y)·inverse(y)·μ(y) = μ(y)` for all `y`.
pub fn is_almost_inverse<S: Scalar>(
    e: &Effect<S>,
    inverse: &Effect<S>,
    base: &Measure<S>,
    tol: f64,
) -> Result<bool> {
    e.space.ensure_eq(&inverse.space, "almost-inverse check")?;
    e.space.ensure_eq(&base.space, "almost-inverse check base")?;
    Ok(base.support_indices().all(|y| {
        let w = base.weight_at(y);
        (e.value_at(y) * inverse.value_at(y) * w.clone()).close(&w, tol)
    }))
}

/// A channel `X ⇸ Y` given by an effect on `X ⊗ Y` and a base measure on `Y`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityChannel<S> {
    density: Effect<S>,
    base: Measure<S>,
    dom: Space,
}

impl<S: Scalar> DensityChannel<S> {
    pub fn new(density: Effect<S>, base: Measure<S>) -> Result<Self> {
        let (dom, cod) = density
            .space
            .factors()
            .ok_or_else(|| Error::mismatch("density domain", "a product space", density.space.name()))?;
        cod.ensure_eq(&base.space, "density base measure")?;
        let dom = dom.clone();
        Ok(DensityChannel { density, base, dom })
    }

    /// The density `p(x,y) = c(y|x) / μ(y)` on `supp μ`, zero elsewhere.
    pub fn from_channel(c: &Channel<S>, base: &Measure<S>) -> Result<Self> {
        c.cod().ensure_eq(&base.space, "density base measure")?;
        let xy = Space::product(c.dom(), c.cod());
        let density = Effect::from_fn(&xy, |k| {
            let (x, y) = xy.split_index(k);
            if base.in_support(y) {
                c.prob(x, y) / base.weight_at(y)
            } else {
                S::zero()
            }
        })?;
        let dc = Self::new(density, base.clone())?;
        dc.realize()?;
        Ok(dc)
    }

    pub fn density(&self) -> &Effect<S> {
        &self.density
    }

    pub fn base(&self) -> &Measure<S> {
        &self.base
    }

    pub fn dom(&self) -> &Space {
        &self.dom
    }

    pub fn cod(&self) -> &Space {
        &self.base.space
    }

    /// The represented channel, `c(y|x) = p(x,y)·μ(y)`.
    pub fn realize(&self) -> Result<Channel<S>> {
        let cod = self.cod();
        let mut rows = Vec::with_capacity(self.dom.len());
        for x in 0..self.dom.len() {
            let dense: Vec<S> = (0..cod.len())
                .map(|y| self.density.pair_value(x, y) * self.base.weight_at(y))
                .collect();
            let total = dense.iter().fold(S::zero(), |a, m| a + m.clone());
            if !total.is_unit_mass() {
                return Err(Error::NotCausal {
                    element: self.dom.element(x).to_string(),
                    total: total.to_text(),
                });
            }
            rows.push(Dist::from_dense_unchecked(cod, dense));
        }
        Ok(Channel::from_rows_unchecked(&self.dom, cod, rows))
    }

    /// Evidence effect `y ↦ Σ_x p(x,y)·π(x)`.
    pub fn evidence(&self, prior: &Dist<S>) -> Result<Effect<S>> {
        self.dom.ensure_eq(prior.space(), "density evidence")?;
        Effect::from_fn(self.cod(), |y| {
            prior
                .entries()
                .fold(S::zero(), |a, (x, px)| a + self.density.pair_value(x, y) * px.clone())
        })
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "density": self.density.to_json(),
            "base": self.base.to_json(),
        })
    }

    pub fn from_json(value: &Value, dom: &Space, cod: &Space) -> Result<Self> {
        let xy = Space::product(dom, cod);
        let density = Effect::from_json(
            value
                .get("density")
                .ok_or_else(|| Error::Json("missing \"density\"".into()))?,
            &xy,
        )?;
        let base = Measure::from_json(
            value
                .get("base")
                .ok_or_else(|| Error::Json("missing \"base\"".into()))?,
            cod,
        )?;
        Self::new(density, base)
    }
}

/// Composite effect `(pμq)(x,z) = Σ_y q(y,z)·μ(y)·p(x,y)`.
pub fn effect_seq<S: Scalar>(p: &Effect<S>, base: &Measure<S>, q: &Effect<S>) -> Result<Effect<S>> {
    let (x, y) = p
        .space
        .factors()
        .ok_or_else(|| Error::mismatch("effect composition", "a product space", p.space.name()))?;
    let (y2, z) = q
        .space
        .factors()
        .ok_or_else(|| Error::mismatch("effect composition", "a product space", q.space.name()))?;
    y.ensure_eq(y2, "effect composition")?;
    y.ensure_eq(&base.space, "effect composition base")?;
    let xz = Space::product(x, z);
    Effect::from_fn(&xz, |k| {
        let (i, l) = xz.split_index(k);
        base.support_indices().fold(S::zero(), |acc, j| {
            acc + q.pair_value(j, l) * base.weight_at(j) * p.pair_value(i, j)
        })
    })
}

/// The density-route inverse: row `y` is `x ↦ p⁻¹(y)·p(x,y)·π(x)`, with
/// `p⁻¹` the `μ`-almost-inverse of the evidence effect. Zero-mass rows are
/// the prior.
pub fn invert_via_density<S: Scalar>(dc: &DensityChannel<S>, prior: &Dist<S>) -> Result<Channel<S>> {
    dc.realize()?;
    let evidence = dc.evidence(prior)?;
    let inverse = almost_inverse(&evidence, &dc.base)?;
    let predicted = push_state(&dc.realize()?, prior)?;
    if predicted.support_indices().next().is_none() {
        return Err(Error::EmptyPushforward);
    }
    density_pattern(dc.density(), prior, &inverse)
}

/// Builds `Y ⇸ X` with rows `x ↦ inverse(y)·f(x,y)·π(x)`; rows that do not
/// sum to one fall back to the prior.
pub fn density_pattern<S: Scalar>(
    f: &Effect<S>,
    prior: &Dist<S>,
    inverse: &Effect<S>,
) -> Result<Channel<S>> {
    let (x_space, y_space) = f
        .space
        .factors()
        .ok_or_else(|| Error::mismatch("density pattern", "a product space", f.space.name()))?;
    x_space.ensure_eq(prior.space(), "density pattern prior")?;
    y_space.ensure_eq(&inverse.space, "density pattern inverse")?;
    let mut rows = Vec::with_capacity(y_space.len());
    for y in 0..y_space.len() {
        let scale = inverse.value_at(y);
        let dense: Vec<S> = (0..x_space.len())
            .map(|x| scale.clone() * f.pair_value(x, y) * prior.mass_at(x))
            .collect();
        let total = dense.iter().fold(S::zero(), |a, m| a + m.clone());
        if total.is_zero() || !total.close(&S::one(), TAU_NORM) {
            rows.push(prior.clone());
        } else if S::MODE == NumericMode::Float {
            let dense = dense.into_iter().map(|m| m / total.clone()).collect();
            rows.push(Dist::from_dense_unchecked(x_space, dense));
        } else {
            rows.push(Dist::from_dense_unchecked(x_space, dense));
        }
    }
    Ok(Channel::from_rows_unchecked(y_space, x_space, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::invert;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn table() -> Channel<Rational> {
        let x = Space::range("X", 2);
        let y = Space::range("Y", 3);
        Channel::from_matrix(
            &x,
            &y,
            vec![vec![q(1, 2), q(1, 4), q(1, 4)], vec![q(1, 6), q(1, 3), q(1, 2)]],
        )
        .unwrap()
    }

    fn density_of(c: &Channel<Rational>) -> Effect<Rational> {
        let xy = Space::product(c.dom(), c.cod());
        Effect::from_fn(&xy, |k| {
            let (x, y) = xy.split_index(k);
            c.prob(x, y)
        })
        .unwrap()
    }

    #[test]
    fn counting_measure_realizes_the_table() {
        let c = table();
        let dc = DensityChannel::new(density_of(&c), Measure::counting(c.cod())).unwrap();
        assert_eq!(dc.realize().unwrap(), c);
    }

    #[test]
    fn rescaled_base_realizes_the_same_channel() {
        let c = table();
        let xy = Space::product(c.dom(), c.cod());
        let density = Effect::from_fn(&xy, |k| {
            let (x, y) = xy.split_index(k);
            if y == 0 {
                c.prob(x, y) / q(2, 1)
            } else {
                c.prob(x, y)
            }
        })
        .unwrap();
        let base = Measure::from_dense(c.cod(), vec![q(2, 1), q(1, 1), q(1, 1)]).unwrap();
        let dc = DensityChannel::new(density, base).unwrap();
        assert_eq!(dc.realize().unwrap(), c);
    }

    #[test]
    fn ones_against_a_state_is_constant() {
        let c = table();
        let sigma = Dist::from_dense(c.cod(), vec![q(1, 5), q(3, 10), q(1, 2)]).unwrap();
        let xy = Space::product(c.dom(), c.cod());
        let dc = DensityChannel::new(Effect::ones(&xy), Measure::from_dist(&sigma)).unwrap();
        assert_eq!(dc.realize().unwrap(), Channel::constant(c.dom(), &sigma));
    }

    #[test]
    fn non_causal_densities_are_flagged() {
        let c = table();
        let xy = Space::product(c.dom(), c.cod());
        let dc = DensityChannel::new(Effect::<Rational>::ones(&xy), Measure::counting(c.cod())).unwrap();
        assert!(matches!(dc.realize(), Err(Error::NotCausal { .. })));
        let pi = Dist::uniform(c.dom());
        assert!(matches!(invert_via_density(&dc, &pi), Err(Error::NotCausal { .. })));
    }

    #[test]
    fn effect_seq_against_ones() {
        // q = 1 reduces pμq(x,z) to Σ_y μ(y) p(x,y) for every z
        let c = table();
        let p = density_of(&c);
        let mu = Measure::from_dense(c.cod(), vec![q(1, 2), q(1, 3), q(1, 6)]).unwrap();
        let z = Space::range("Z", 2);
        let ones = Effect::ones(&Space::product(c.cod(), &z));
        let composite = effect_seq(&p, &mu, &ones).unwrap();
        for x in 0..2 {
            let expected = (0..3).fold(q(0, 1), |a, y| a + mu.weight_at(y) * c.prob(x, y));
            for zi in 0..2 {
                assert_eq!(composite.pair_value(x, zi), expected);
            }
        }
    }

    #[test]
    fn effect_seq_substitutes_deterministic_densities() {
        let x = Space::range("X", 3);
        let y = Space::range("Y", 2);
        let z = Space::range("Z", 2);
        let f = |i: usize| (i + 1) % 2;
        let p = Effect::from_fn(&Space::product(&x, &y), |k| {
            let (i, j) = (k / 2, k % 2);
            if f(i) == j {
                q(1, 1)
            } else {
                q(0, 1)
            }
        })
        .unwrap();
        let qe = Effect::from_dense(&Space::product(&y, &z), vec![q(1, 3), q(2, 3), q(5, 7), q(2, 7)])
            .unwrap();
        let composite = effect_seq(&p, &Measure::counting(&y), &qe).unwrap();
        for i in 0..3 {
            for l in 0..2 {
                assert_eq!(composite.pair_value(i, l), qe.pair_value(f(i), l));
            }
        }
    }

    #[test]
    fn almost_inverse_examples() {
        let y = Space::range("Y", 3);
        let mu = Measure::from_dense(&y, vec![q(1, 1), q(2, 1), q(0, 1)]).unwrap();
        let inv = almost_inverse(&Effect::ones(&y), &mu).unwrap();
        assert_eq!(inv.to_dense(), vec![q(1, 1), q(1, 1), q(0, 1)]);

        let e = Effect::from_dense(&y, vec![q(4, 1), q(1, 2), q(3, 1)]).unwrap();
        let inv = almost_inverse(&e, &mu).unwrap();
        assert_eq!(inv.value_at(0), q(1, 4));
        assert!(is_almost_inverse(&e, &inv, &mu, 0.0).unwrap());

        let other = Effect::from_dense(&y, vec![q(1, 4), q(2, 1), q(9, 1)]).unwrap();
        assert!(is_almost_inverse(&e, &other, &mu, 0.0).unwrap());
        assert!(effects_almost_equal(&inv, &other, &mu, 0.0).unwrap());
        assert!(!effects_almost_equal(&inv, &e, &mu, 0.0).unwrap());
    }

    #[test]
    fn density_route_matches_direct_inversion() {
        let c = table();
        let mu = Measure::from_dense(c.cod(), vec![q(1, 2), q(3, 1), q(1, 1)]).unwrap();
        let dc = DensityChannel::from_channel(&c, &mu).unwrap();
        let pi = Dist::from_dense(c.dom(), vec![q(2, 7), q(5, 7)]).unwrap();
        assert_eq!(invert_via_density(&dc, &pi).unwrap(), invert(&c, &pi).unwrap().channel);

        // doubling μ(y) and halving p(·,y) leaves the inverse unchanged
        let xy = Space::product(c.dom(), c.cod());
        let halved = Effect::from_fn(&xy, |k| {
            let (_, y) = xy.split_index(k);
            let v = dc.density().value_at(k);
            if y == 1 {
                v / q(2, 1)
            } else {
                v
            }
        })
        .unwrap();
        let doubled = Measure::from_dense(c.cod(), vec![q(1, 2), q(6, 1), q(1, 1)]).unwrap();
        let rescaled = DensityChannel::new(halved, doubled).unwrap();
        assert_eq!(rescaled.realize().unwrap(), c);
        assert_eq!(
            invert_via_density(&rescaled, &pi).unwrap(),
            invert_via_density(&dc, &pi).unwrap()
        );
    }

    #[test]
    fn identity_density_inverts_to_diracs() {
        let x = Space::range("X", 3);
        let dc = DensityChannel::from_channel(&Channel::identity(&x), &Measure::counting(&x)).unwrap();
        let pi = Dist::from_dense(&x, vec![q(1, 2), q(1, 4), q(1, 4)]).unwrap();
        assert_eq!(invert_via_density(&dc, &pi).unwrap(), Channel::identity(&x));
    }

    #[test]
    fn rejects_bad_weights() {
        let y = Space::range("Y", 2);
        assert!(Measure::from_dense(&y, vec![q(0, 1), q(0, 1)]).is_err());
        assert!(Effect::from_dense(&y, vec![q(-1, 1), q(0, 1)]).is_err());
        assert!(Effect::from_dense(&y, vec![f64::INFINITY, 1.0]).is_err());
        assert!(DensityChannel::new(Effect::<Rational>::ones(&y), Measure::counting(&y)).is_err());
    }

    #[test]
    fn json_shapes() {
        let c = table();
        let mu = Measure::from_dense(c.cod(), vec![q(1, 2), q(3, 1), q(1, 1)]).unwrap();
        let dc = DensityChannel::from_channel(&c, &mu).unwrap();
        let v = dc.to_json();
        assert_eq!(v["base"]["weights"]["0"], serde_json::json!("1/2"));
        assert_eq!(v["density"]["space"], serde_json::json!("X*Y"));
        assert_eq!(DensityChannel::from_json(&v, c.dom(), c.cod()).unwrap(), dc);
    }
}
