//! Stochastic channels: Kleisli morphisms of the distribution monad.
//!
//! A [`Channel`] from `X` to `Y` stores one distribution on `Y` per element
//! of `X`. Composition is the Chapman-Kolmogorov sum and the monoidal product
//! multiplies independent rows. The copy/discard/swap/projection maps give
//! every space its commutative comonoid structure.

use std::fmt;

use serde_json::{Map, Value};

use crate::dist::{kleisli_extend, Dist};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::Space;

/// A stochastic matrix `dom ⇸ cod`.
#[derive(Clone, PartialEq)]
pub struct Channel<S> {
    dom: Space,
    cod: Space,
    rows: Vec<Dist<S>>,
}

/// Names of the structural (comonoid and symmetry) channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structural {
    Copy,
    Discard,
    Swap,
    Proj1,
    Proj2,
}

impl<S: Scalar> Channel<S> {
    /// Builds a channel from one `(dom element, row)` pair per domain element.
    pub fn from_table<I, L>(dom: &Space, cod: &Space, table: I) -> Result<Self>
    where
        I: IntoIterator<Item = (L, Dist<S>)>,
        L: AsRef<str>,
    {
        let mut rows: Vec<Option<Dist<S>>> = vec![None; dom.len()];
        for (label, row) in table {
            let x = dom.require(label.as_ref())?;
            cod.ensure_eq(row.space(), "channel row")?;
            if rows[x].replace(row).is_some() {
                return Err(Error::DuplicateElement {
                    element: label.as_ref().to_string(),
                    space: dom.name().to_string(),
                });
            }
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(x, r)| {
                r.ok_or_else(|| Error::MissingRow {
                    element: dom.element(x).to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Channel {
            dom: dom.clone(),
            cod: cod.clone(),
            rows,
        })
    }

    /// Builds a channel from rows in domain order.
    pub fn from_rows(dom: &Space, cod: &Space, rows: Vec<Dist<S>>) -> Result<Self> {
        if rows.len() != dom.len() {
            let missing = dom.element(rows.len().min(dom.len() - 1));
            return Err(Error::MissingRow {
                element: missing.to_string(),
            });
        }
        for r in &rows {
            cod.ensure_eq(r.space(), "channel row")?;
        }
        Ok(Channel {
            dom: dom.clone(),
            cod: cod.clone(),
            rows,
        })
    }

    /// Builds a channel from a dense matrix, `matrix[x][y] = c(y|x)`.
    pub fn from_matrix(dom: &Space, cod: &Space, matrix: Vec<Vec<S>>) -> Result<Self> {
        let rows = matrix
            .into_iter()
            .map(|r| Dist::from_dense(cod, r))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(dom, cod, rows)
    }

    pub(crate) fn from_rows_unchecked(dom: &Space, cod: &Space, rows: Vec<Dist<S>>) -> Self {
        debug_assert_eq!(rows.len(), dom.len());
        Channel {
            dom: dom.clone(),
            cod: cod.clone(),
            rows,
        }
    }

    pub fn identity(space: &Space) -> Self {
        let rows = (0..space.len()).map(|i| Dist::dirac_at(space, i)).collect();
        Self::from_rows_unchecked(space, space, rows)
    }

    /// Every row equal to `state`.
    pub fn constant(dom: &Space, state: &Dist<S>) -> Self {
        Self::from_rows_unchecked(dom, state.space(), vec![state.clone(); dom.len()])
    }

    /// The binary symmetric channel with flip probability `eps`.
    pub fn binary_symmetric(space: &Space, eps: S) -> Result<Self> {
        if space.len() != 2 {
            return Err(Error::mismatch("binary symmetric channel", "2 elements", space.len()));
        }
        let keep = S::one() - eps.clone();
        Self::from_matrix(
            space,
            space,
            vec![vec![keep.clone(), eps.clone()], vec![eps, keep]],
        )
    }

    /// The deterministic channel of a total function on labels.
    pub fn lift_function<F>(dom: &Space, cod: &Space, f: F) -> Result<Self>
    where
        F: Fn(&str) -> String,
    {
        let rows = dom
            .elements()
            .iter()
            .map(|x| Dist::dirac(cod, &f(x)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_rows_unchecked(dom, cod, rows))
    }

    /// A deterministic channel from an index map.
    pub fn from_index_map(dom: &Space, cod: &Space, f: impl Fn(usize) -> usize) -> Self {
        let rows = (0..dom.len()).map(|x| Dist::dirac_at(cod, f(x))).collect();
        Self::from_rows_unchecked(dom, cod, rows)
    }

    /// Copy `X → X⊗X`, discard `X → I`, swap `X⊗Y → Y⊗X`, projections
    /// `X⊗Y → X` and `X⊗Y → Y`.
    ///
    /// `spaces` holds `[X]` for copy and discard, `[X, Y]` otherwise.
    pub fn structural(kind: Structural, spaces: &[Space]) -> Result<Self> {
        let arity = match kind {
            Structural::Copy | Structural::Discard => 1,
            _ => 2,
        };
        if spaces.len() != arity {
            return Err(Error::mismatch(
                "structural channel arity",
                arity,
                spaces.len(),
            ));
        }
        let x = &spaces[0];
        Ok(match kind {
            Structural::Copy => {
                let xx = Space::product(x, x);
                Self::from_index_map(x, &xx, |i| xx.pair_index(i, i))
            }
            Structural::Discard => Self::from_index_map(x, &Space::unit(), |_| 0),
            Structural::Swap => {
                let y = &spaces[1];
                let xy = Space::product(x, y);
                let yx = Space::product(y, x);
                Self::from_index_map(&xy, &yx, |k| {
                    let (i, j) = xy.split_index(k);
                    yx.pair_index(j, i)
                })
            }
            Structural::Proj1 => {
                let xy = Space::product(x, &spaces[1]);
                Self::from_index_map(&xy, x, |k| xy.split_index(k).0)
            }
            Structural::Proj2 => {
                let y = &spaces[1];
                let xy = Space::product(x, y);
                Self::from_index_map(&xy, y, |k| xy.split_index(k).1)
            }
        })
    }

    pub fn copy(space: &Space) -> Self {
        Self::structural(Structural::Copy, std::slice::from_ref(space)).expect("arity 1")
    }

    pub fn discard(space: &Space) -> Self {
        Self::structural(Structural::Discard, std::slice::from_ref(space)).expect("arity 1")
    }

    /// A state viewed as a channel out of the unit `I`.
    pub fn from_state(state: &Dist<S>) -> Self {
        Self::constant(&Space::unit(), state)
    }

    /// The state of a channel out of the unit `I`.
    pub fn to_state(&self) -> Result<Dist<S>> {
        self.dom.ensure_eq(&Space::unit(), "channel as state")?;
        Ok(self.rows[0].clone())
    }

    pub fn dom(&self) -> &Space {
        &self.dom
    }

    pub fn cod(&self) -> &Space {
        &self.cod
    }

    pub fn row(&self, x: usize) -> &Dist<S> {
        &self.rows[x]
    }

    pub fn row_of(&self, x: &str) -> Result<&Dist<S>> {
        Ok(&self.rows[self.dom.require(x)?])
    }

    pub fn rows(&self) -> &[Dist<S>] {
        &self.rows
    }

    /// `c(y|x)` by index.
    pub fn prob(&self, x: usize, y: usize) -> S {
        self.rows[x].mass_at(y)
    }

    /// Sequential composite `next ∘ self` (run `self`, then `next`).
    pub fn then(&self, next: &Channel<S>) -> Result<Channel<S>> {
        self.cod.ensure_eq(&next.dom, "sequential composition")?;
        let rows = self
            .rows
            .iter()
            .map(|r| kleisli_extend(next, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_rows_unchecked(&self.dom, &next.cod, rows))
    }

    /// Monoidal product `self ⊗ other`.
    pub fn tensor(&self, other: &Channel<S>) -> Channel<S> {
        let dom = Space::product(&self.dom, &other.dom);
        let cod = Space::product(&self.cod, &other.cod);
        let mut rows = Vec::with_capacity(dom.len());
        for f_row in &self.rows {
            for g_row in &other.rows {
                let mut dense = vec![S::zero(); cod.len()];
                for (a, fa) in f_row.entries() {
                    for (b, gb) in g_row.entries() {
                        dense[cod.pair_index(a, b)] = fa.clone() * gb.clone();
                    }
                }
                rows.push(Dist::from_dense_unchecked(&cod, dense));
            }
        }
        Self::from_rows_unchecked(&dom, &cod, rows)
    }

    /// Every row is a point mass.
    pub fn rows_are_dirac(&self) -> bool {
        self.rows.iter().all(Dist::is_dirac)
    }

    /// Whether `copy ∘ c = (c ⊗ c) ∘ copy`, i.e. `c` is a comonoid
    /// homomorphism.
    pub fn is_deterministic(&self, tol: f64) -> bool {
        let lhs = self.then(&Channel::copy(&self.cod)).expect("cod matches");
        let rhs = Channel::copy(&self.dom)
            .then(&self.tensor(self))
            .expect("dom matches");
        let by_equation = lhs.approx_eq(&rhs, tol);
        if S::MODE == crate::scalar::NumericMode::Rational {
            debug_assert_eq!(by_equation, self.rows_are_dirac());
        }
        by_equation
    }

    pub fn approx_eq(&self, other: &Channel<S>, tol: f64) -> bool {
        self.dom == other.dom
            && self.cod == other.cod
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| a.approx_eq(b, tol))
    }

    /// Largest total-variation distance between corresponding rows.
    pub fn max_row_gap(&self, other: &Channel<S>) -> Result<S> {
        self.dom.ensure_eq(&other.dom, "row gap")?;
        let mut gap = S::zero();
        for (a, b) in self.rows.iter().zip(&other.rows) {
            gap = S::max_of(gap, a.total_variation(b)?);
        }
        Ok(gap)
    }

    pub fn to_f64(&self) -> Channel<f64> {
        Channel {
            dom: self.dom.clone(),
            cod: self.cod.clone(),
            rows: self.rows.iter().map(Dist::to_f64).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        let rows: Map<String, Value> = self
            .rows
            .iter()
            .enumerate()
            .map(|(x, r)| {
                let masses: Map<String, Value> = r
                    .entries()
                    .map(|(y, m)| (self.cod.element(y).to_string(), m.to_json()))
                    .collect();
                (self.dom.element(x).to_string(), Value::Object(masses))
            })
            .collect();
        serde_json::json!({
            "dom": self.dom.elements(),
            "cod": self.cod.elements(),
            "rows": rows,
        })
    }

    /// Reads the channel JSON format, naming the anonymous spaces it
    /// carries. Stochasticity is validated.
    pub fn from_json(value: &Value, dom_name: &str, cod_name: &str) -> Result<Self> {
        let labels = |key: &str| -> Result<Vec<String>> {
            value
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Json(format!("channel needs a \"{key}\" array")))?
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| Error::Json(format!("\"{key}\" labels must be strings")))
                })
                .collect()
        };
        let dom = Space::new(dom_name, labels("dom")?)?;
        let cod = Space::new(cod_name, labels("cod")?)?;
        let rows = value
            .get("rows")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Json("channel needs a \"rows\" object".into()))?;
        let mut table = Vec::with_capacity(rows.len());
        for (x, row) in rows {
            let masses = row
                .as_object()
                .ok_or_else(|| Error::Json(format!("row `{x}` must be an object")))?;
            let entries = masses
                .iter()
                .map(|(y, m)| Ok((y.as_str(), S::from_json(m)?)))
                .collect::<Result<Vec<_>>>()?;
            table.push((x.as_str(), Dist::new(&cod, entries)?));
        }
        Self::from_table(&dom, &cod, table)
    }
}

/// `q ∘ p`, written in diagrammatic order: `p` first.
pub fn seq_compose<S: Scalar>(p: &Channel<S>, q: &Channel<S>) -> Result<Channel<S>> {
    p.then(q)
}

/// Pushes a state forward: `c ∘ π`.
pub fn push_state<S: Scalar>(c: &Channel<S>, state: &Dist<S>) -> Result<Dist<S>> {
    kleisli_extend(c, state)
}

impl<S: Scalar> fmt::Debug for Channel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Channel {} -> {}", self.dom.name(), self.cod.name())?;
        for (x, r) in self.rows.iter().enumerate() {
            writeln!(f, "  {} -> {}", self.dom.element(x), r)?;
        }
        Ok(())
    }
}
