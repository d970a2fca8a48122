use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A named finite set with a canonical element order.
///
/// Cloning is cheap. Two spaces are equal when their names and element lists
/// agree.
#[derive(Clone)]
pub struct Space {
    inner: Arc<SpaceInner>,
}

struct SpaceInner {
    name: String,
    elements: Vec<String>,
    index: HashMap<String, usize>,
    factors: Option<(Space, Space)>,
}

/// Name of the monoidal unit.
pub const UNIT_NAME: &str = "I";
/// The single element of the monoidal unit.
pub const UNIT_ELEMENT: &str = "*";

impl Space {
    /// Builds a space with elements in declaration order.
    pub fn new<I, S>(name: impl Into<String>, elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let name = name.into();
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        Self::build(name, elements, None)
    }

    /// Builds a space whose elements are sorted lexicographically.
    pub fn sorted<I, S>(name: impl Into<String>, elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        elements.sort();
        Self::build(name.into(), elements, None)
    }

    /// `{0, 1, ..., n-1}` labelled by decimal strings.
    pub fn range(name: impl Into<String>, n: usize) -> Self {
        Self::new(name, (0..n).map(|i| i.to_string())).expect("range labels are distinct and n > 0")
    }

    /// The one-element monoidal unit `I = {*}`.
    pub fn unit() -> Self {
        Self::new(UNIT_NAME, [UNIT_ELEMENT]).expect("unit space is valid")
    }

    /// The product `X ⊗ Y`; elements are `"(x,y)"` in row-major order.
    pub fn product(left: &Space, right: &Space) -> Self {
        let name = format!("{}*{}", left.name(), right.name());
        let mut elements = Vec::with_capacity(left.len() * right.len());
        for a in left.elements() {
            for b in right.elements() {
                elements.push(pair_label(a, b));
            }
        }
        Self::build(name, elements, Some((left.clone(), right.clone())))
            .expect("pair labels of distinct factors are distinct")
    }

    fn build(name: String, elements: Vec<String>, factors: Option<(Space, Space)>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptySpace(name));
        }
        let mut index = HashMap::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(Error::DuplicateElement {
                    element: e.clone(),
                    space: name,
                });
            }
        }
        Ok(Space {
            inner: Arc::new(SpaceInner {
                name,
                elements,
                index,
                factors,
            }),
        })
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn elements(&self) -> &[String] {
        &self.inner.elements
    }

    pub fn len(&self) -> usize {
        self.inner.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn element(&self, i: usize) -> &str {
        &self.inner.elements[i]
    }

    pub fn index_of(&self, element: &str) -> Option<usize> {
        self.inner.index.get(element).copied()
    }

    pub fn require(&self, element: &str) -> Result<usize> {
        self.index_of(element).ok_or_else(|| Error::UnknownElement {
            element: element.to_string(),
            space: self.name().to_string(),
        })
    }

    /// The factors when this space was built by [`Space::product`].
    pub fn factors(&self) -> Option<(&Space, &Space)> {
        self.inner.factors.as_ref().map(|(a, b)| (a, b))
    }

    /// Index of the pair `(i, j)` in a product space.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        let (_, right) = self.factors().expect("pair_index on a non-product space");
        i * right.len() + j
    }

    /// Inverse of [`Space::pair_index`].
    pub fn split_index(&self, k: usize) -> (usize, usize) {
        let (_, right) = self.factors().expect("split_index on a non-product space");
        (k / right.len(), k % right.len())
    }

    pub(crate) fn ensure_eq(&self, other: &Space, context: &'static str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::mismatch(context, self, other))
        }
    }
}

/// Encodes a pair of labels as `"(a,b)"`.
pub fn pair_label(a: &str, b: &str) -> String {
    format!("({a},{b})")
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.name == other.inner.name && self.inner.elements == other.inner.elements)
    }
}

impl Eq for Space {}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {{{}}}", self.name(), self.elements().join(", "))
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(matches!(
            Space::new("X", ["a", "a"]),
            Err(Error::DuplicateElement { .. })
        ));
        assert!(matches!(
            Space::new("X", Vec::<String>::new()),
            Err(Error::EmptySpace(_))
        ));
    }

    #[test]
    fn sorted_spaces_are_lexicographic() {
        let s = Space::sorted("S", ["b", "c", "a"]).unwrap();
        assert_eq!(s.elements(), ["a", "b", "c"]);
    }

    #[test]
    fn product_labels_and_indexing() {
        let x = Space::new("X", ["a", "b"]).unwrap();
        let y = Space::range("Y", 3);
        let xy = Space::product(&x, &y);
        assert_eq!(xy.len(), 6);
        assert_eq!(xy.name(), "X*Y");
        assert_eq!(xy.element(xy.pair_index(1, 2)), "(b,2)");
        assert_eq!(xy.split_index(4), (1, 1));
        // nested products associate left
        let xyx = Space::product(&xy, &x);
        assert_eq!(xyx.element(0), "((a,0),a)");
    }

    #[test]
    fn equality_uses_name_and_elements() {
        let a = Space::new("X", ["0", "1"]).unwrap();
        assert_eq!(a, Space::range("X", 2));
        assert_ne!(a, Space::range("Y", 2));
        assert_eq!(Space::unit().elements(), [UNIT_ELEMENT]);
    }
}
