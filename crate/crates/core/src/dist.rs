//! Finitely-supported probability distributions and the distribution monad.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{Map, Value};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
pub use crate::space::Space;

/// A finitely-supported probability distribution on a [`Space`].
///
/// Only nonzero masses are stored, keyed by element index, so iteration
/// follows the canonical element order.
#[derive(Clone, PartialEq)]
pub struct Dist<S> {
    space: Space,
    masses: BTreeMap<usize, S>,
}

impl<S: Scalar> Dist<S> {
    /// Builds a distribution from labelled masses. Repeated labels accumulate.
    pub fn new<I, L>(space: &Space, masses: I) -> Result<Self>
    where
        I: IntoIterator<Item = (L, S)>,
        L: AsRef<str>,
    {
        let mut dense = vec![S::zero(); space.len()];
        for (label, mass) in masses {
            let i = space.require(label.as_ref())?;
            if mass.is_negative() {
                return Err(Error::NegativeMass {
                    element: label.as_ref().to_string(),
                    value: mass.to_text(),
                });
            }
            dense[i] = dense[i].clone() + mass;
        }
        Self::from_dense(space, dense)
    }

    /// Builds a distribution from one mass per element in canonical order.
    pub fn from_dense(space: &Space, dense: Vec<S>) -> Result<Self> {
        if dense.len() != space.len() {
            return Err(Error::mismatch(
                "distribution length",
                space.len(),
                dense.len(),
            ));
        }
        let mut total = S::zero();
        for (i, m) in dense.iter().enumerate() {
            if m.is_negative() {
                return Err(Error::NegativeMass {
                    element: space.element(i).to_string(),
                    value: m.to_text(),
                });
            }
            total = total + m.clone();
        }
        if !total.is_unit_mass() {
            return Err(Error::NotNormalized {
                what: format!("distribution on {}", space.name()),
                total: total.to_text(),
            });
        }
        Ok(Self::from_dense_unchecked(space, dense))
    }

    pub(crate) fn from_dense_unchecked(space: &Space, dense: Vec<S>) -> Self {
        let masses = dense
            .into_iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .collect();
        Dist {
            space: space.clone(),
            masses,
        }
    }

    /// The unit of the monad: all mass on `x`.
    pub fn dirac(space: &Space, x: &str) -> Result<Self> {
        let i = space.require(x)?;
        Ok(Self::dirac_at(space, i))
    }

    pub fn dirac_at(space: &Space, i: usize) -> Self {
        assert!(i < space.len(), "dirac index out of range");
        Dist {
            space: space.clone(),
            masses: BTreeMap::from([(i, S::one())]),
        }
    }

    pub fn uniform(space: &Space) -> Self {
        let n = space.len() as i64;
        Self::from_dense_unchecked(space, vec![S::from_ratio(1, n); space.len()])
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    /// Mass at a labelled element; zero for labels outside the support.
    pub fn mass(&self, element: &str) -> Result<S> {
        let i = self.space.require(element)?;
        Ok(self.mass_at(i))
    }

    pub fn mass_at(&self, i: usize) -> S {
        self.masses.get(&i).cloned().unwrap_or_else(S::zero)
    }

    /// Support indices in canonical order.
    pub fn support_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.masses.keys().copied()
    }

    /// Support labels in canonical order.
    pub fn support(&self) -> Vec<&str> {
        self.masses.keys().map(|&i| self.space.element(i)).collect()
    }

    pub fn has_full_support(&self) -> bool {
        self.masses.len() == self.space.len()
    }

    /// Nonzero entries as `(index, mass)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, &S)> + '_ {
        self.masses.iter().map(|(&i, m)| (i, m))
    }

    pub fn to_dense(&self) -> Vec<S> {
        (0..self.space.len()).map(|i| self.mass_at(i)).collect()
    }

    pub fn is_dirac(&self) -> bool {
        self.masses.len() == 1
    }

    pub fn total_mass(&self) -> S {
        self.masses.values().fold(S::zero(), |acc, m| acc + m.clone())
    }

    /// Half the L1 distance between two distributions on the same space.
    pub fn total_variation(&self, other: &Dist<S>) -> Result<S> {
        self.space.ensure_eq(&other.space, "total variation")?;
        let mut sum = S::zero();
        for i in 0..self.space.len() {
            sum = sum + (self.mass_at(i) - other.mass_at(i)).abs();
        }
        Ok(sum / S::from_ratio(2, 1))
    }

    /// Pointwise equality within `tol` (exact for rationals).
    pub fn approx_eq(&self, other: &Dist<S>, tol: f64) -> bool {
        self.space == other.space
            && (0..self.space.len()).all(|i| self.mass_at(i).close(&other.mass_at(i), tol))
    }

    /// Converts between numeric backends through `f64` or exact text.
    pub fn to_f64(&self) -> Dist<f64> {
        Dist {
            space: self.space.clone(),
            masses: self.masses.iter().map(|(&i, m)| (i, m.to_f64())).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        let masses: Map<String, Value> = self
            .entries()
            .map(|(i, m)| (self.space.element(i).to_string(), m.to_json()))
            .collect();
        serde_json::json!({ "space": self.space.name(), "masses": masses })
    }

    /// Reads `{"space": name, "masses": {...}}` against a known space.
    pub fn from_json(value: &Value, space: &Space) -> Result<Self> {
        let name = value
            .get("space")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Json("distribution needs a \"space\" name".into()))?;
        if name != space.name() {
            return Err(Error::mismatch("distribution import", space.name(), name));
        }
        let masses = value
            .get("masses")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Json("distribution needs a \"masses\" object".into()))?;
        let mut entries = Vec::with_capacity(masses.len());
        for (label, m) in masses {
            entries.push((label.as_str(), S::from_json(m)?));
        }
        Self::new(space, entries)
    }
}

/// Convex combination of distributions on a common space.
pub fn convex_mix<S: Scalar>(weights: &[(S, Dist<S>)]) -> Result<Dist<S>> {
    let (_, first) = weights
        .first()
        .ok_or_else(|| Error::NotNormalized {
            what: "mixture weights".into(),
            total: "0".into(),
        })?;
    let space = first.space().clone();
    let mut total = S::zero();
    let mut dense = vec![S::zero(); space.len()];
    for (w, d) in weights {
        space.ensure_eq(d.space(), "convex mixture")?;
        if w.is_negative() {
            return Err(Error::NegativeMass {
                element: "mixture weight".into(),
                value: w.to_text(),
            });
        }
        total = total + w.clone();
        for (i, m) in d.entries() {
            dense[i] = dense[i].clone() + w.clone() * m.clone();
        }
    }
    if !total.is_unit_mass() {
        return Err(Error::NotNormalized {
            what: "mixture weights".into(),
            total: total.to_text(),
        });
    }
    Dist::from_dense(&space, dense)
}

/// Kleisli extension `q▷(ρ)(z) = Σ_y q(z|y) ρ(y)`.
pub fn kleisli_extend<S: Scalar>(q: &Channel<S>, rho: &Dist<S>) -> Result<Dist<S>> {
    q.dom().ensure_eq(rho.space(), "kleisli extension")?;
    let mut dense = vec![S::zero(); q.cod().len()];
    for (y, py) in rho.entries() {
        for (z, qz) in q.row(y).entries() {
            dense[z] = dense[z].clone() + qz.clone() * py.clone();
        }
    }
    Ok(Dist::from_dense_unchecked(q.cod(), dense))
}

impl<S: Scalar> fmt::Display for Dist<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (i, m)) in self.entries().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {}", self.space.element(i), m.to_text())?;
        }
        f.write_str("}")
    }
}

impl<S: Scalar> fmt::Debug for Dist<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dist[{}]{}", self.space.name(), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn ab() -> Space {
        Space::new("X", ["a", "b"]).unwrap()
    }

    #[test]
    fn make_dist_examples() {
        let x = ab();
        let u = Dist::new(&x, [("a", q(1, 2)), ("b", q(1, 2))]).unwrap();
        assert_eq!(u, Dist::uniform(&x));

        let d = Dist::new(&x, [("a", q(1, 1)), ("b", q(0, 1))]).unwrap();
        assert_eq!(d, Dist::dirac(&x, "a").unwrap());
        assert_eq!(d.support(), ["a"]);

        let err = Dist::new(&x, [("a", q(3, 10)), ("b", q(6, 10))]).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn make_dist_rejects_bad_entries() {
        let x = ab();
        assert!(matches!(
            Dist::new(&x, [("c", q(1, 1))]),
            Err(Error::UnknownElement { .. })
        ));
        assert!(matches!(
            Dist::new(&x, [("a", q(3, 2)), ("b", q(-1, 2))]),
            Err(Error::NegativeMass { .. })
        ));
    }

    #[test]
    fn float_normalization_tolerance() {
        let x = ab();
        assert!(Dist::new(&x, [("a", 0.1 + 0.2), ("b", 0.7)]).is_ok());
        assert!(Dist::new(&x, [("a", 0.3), ("b", 0.6)]).is_err());
    }

    #[test]
    fn dirac_examples() {
        let x = ab();
        let d: Dist<Rational> = Dist::dirac(&x, "a").unwrap();
        assert_eq!(d.mass("a").unwrap(), q(1, 1));
        assert_eq!(d.mass("b").unwrap(), q(0, 1));

        let r = Space::range("N", 3);
        let d: Dist<Rational> = Dist::dirac(&r, "2").unwrap();
        assert_eq!(d.to_string(), "{2: 1}");

        let one = Space::new("A", ["a"]).unwrap();
        assert!(matches!(
            Dist::<Rational>::dirac(&one, "b"),
            Err(Error::UnknownElement { .. })
        ));
    }

    #[test]
    fn convex_mix_examples() {
        let x = ab();
        let d = Dist::new(&x, [("a", q(1, 3)), ("b", q(2, 3))]).unwrap();
        assert_eq!(convex_mix(&[(q(1, 1), d.clone())]).unwrap(), d);

        let da = Dist::dirac(&x, "a").unwrap();
        let db = Dist::dirac(&x, "b").unwrap();
        let half = convex_mix(&[(q(1, 2), da.clone()), (q(1, 2), db)]).unwrap();
        assert_eq!(half, Dist::uniform(&x));

        // 1/4 + 3/4 * 1/3 = 1/2
        let mixed = convex_mix(&[(q(1, 4), da), (q(3, 4), d)]).unwrap();
        assert_eq!(mixed, Dist::uniform(&x));
    }

    #[test]
    fn convex_mix_errors() {
        let x = ab();
        let y = Space::range("Y", 2);
        let dx: Dist<Rational> = Dist::uniform(&x);
        let dy: Dist<Rational> = Dist::uniform(&y);
        assert!(matches!(
            convex_mix(&[(q(1, 2), dx.clone()), (q(1, 2), dy)]),
            Err(Error::SpaceMismatch { .. })
        ));
        assert!(matches!(
            convex_mix(&[(q(1, 2), dx)]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn total_variation_is_half_l1() {
        let x = ab();
        let a: Dist<Rational> = Dist::dirac(&x, "a").unwrap();
        let u = Dist::uniform(&x);
        assert_eq!(a.total_variation(&u).unwrap(), q(1, 2));
        assert_eq!(a.total_variation(&a).unwrap(), q(0, 1));
    }

    #[test]
    fn json_round_trip() {
        let x = ab();
        let d = Dist::new(&x, [("a", q(1, 2)), ("b", q(1, 2))]).unwrap();
        let v = d.to_json();
        assert_eq!(
            v,
            serde_json::json!({"space": "X", "masses": {"a": "1/2", "b": "1/2"}})
        );
        assert_eq!(Dist::<Rational>::from_json(&v, &x).unwrap(), d);

        let f = Dist::new(&x, [("a", 0.25), ("b", 0.75)]).unwrap();
        assert_eq!(
            f.to_json(),
            serde_json::json!({"space": "X", "masses": {"a": 0.25, "b": 0.75}})
        );
    }
}
