//! Numeric backends for probabilities.
//!
//! Every container in the crate is generic over [`Scalar`]. Two backends are
//! provided: [`Rational`] (arbitrary-precision exact rationals, the reference
//! mode) and `f64` (fast mode, compared within a tolerance).

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational probability.
pub type Rational = BigRational;

/// Normalization tolerance for float mode.
pub const TAU_NORM: f64 = 1e-9;
/// Default comparison tolerance for float mode.
pub const TAU_CMP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    #[default]
    Rational,
    Float,
}

impl Display for NumericMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NumericMode::Rational => f.write_str("rational"),
            NumericMode::Float => f.write_str("float"),
        }
    }
}

impl FromStr for NumericMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(NumericMode::Rational),
            "float" => Ok(NumericMode::Float),
            other => Err(Error::InvalidNumber(other.to_string())),
        }
    }
}

/// A field of probability values.
pub trait Scalar:
    Clone + PartialOrd + Debug + Display + Send + Sync + Signed + 'static
{
    const MODE: NumericMode;

    /// `num / den`, exactly when the backend allows it.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Parses `p/q`, an integer, or a decimal literal. Decimals are exact
    /// decimal fractions in rational mode.
    fn parse(text: &str) -> Result<Self>;

    fn to_f64(&self) -> f64;

    /// Equality up to `tol`. Exact backends ignore the tolerance.
    fn close(&self, other: &Self, tol: f64) -> bool;

    /// Whether a total mass counts as 1.
    fn is_unit_mass(&self) -> bool {
        self.close(&Self::one(), TAU_NORM)
    }

    /// Canonical text: `p/q` for rationals, shortest round-trip decimal for
    /// floats.
    fn to_text(&self) -> String;

    /// JSON encoding: rationals as `"p/q"` strings, floats as numbers.
    fn to_json(&self) -> serde_json::Value;

    fn from_json(value: &serde_json::Value) -> Result<Self>;

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

/// Splits a decimal literal into an exact numerator/denominator pair.
fn parse_decimal(text: &str) -> Option<(BigInt, BigInt)> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = digits.parse().ok()?;
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    if scale >= 0 {
        Some((num * num_traits::pow(ten, scale as usize), BigInt::one()))
    } else {
        Some((num, num_traits::pow(ten, (-scale) as usize)))
    }
}

impl Scalar for Rational {
    const MODE: NumericMode = NumericMode::Rational;

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let invalid = || Error::InvalidNumber(text.to_string());
        if let Some((n, d)) = text.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| invalid())?;
            let d: BigInt = d.trim().parse().map_err(|_| invalid())?;
            if d.is_zero() {
                return Err(invalid());
            }
            return Ok(BigRational::new(n, d));
        }
        let (n, d) = parse_decimal(text).ok_or_else(invalid)?;
        Ok(BigRational::new(n, d))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn close(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn to_text(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_text())
    }

    fn from_json(value: &serde_json::Value) -> Result<Self> {
        match value {
            serde_json::Value::String(s) => Self::parse(s),
            serde_json::Value::Number(n) => Self::parse(&n.to_string()),
            other => Err(Error::InvalidNumber(other.to_string())),
        }
    }
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Float;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let invalid = || Error::InvalidNumber(text.to_string());
        let value = if let Some((n, d)) = text.split_once('/') {
            let n: f64 = n.trim().parse().map_err(|_| invalid())?;
            let d: f64 = d.trim().parse().map_err(|_| invalid())?;
            if d == 0.0 {
                return Err(invalid());
            }
            n / d
        } else {
            text.parse().map_err(|_| invalid())?
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(invalid())
        }
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn close(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn to_text(&self) -> String {
        format!("{self}")
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }

    fn from_json(value: &serde_json::Value) -> Result<Self> {
        match value {
            serde_json::Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::InvalidNumber(n.to_string())),
            serde_json::Value::String(s) => Self::parse(s),
            other => Err(Error::InvalidNumber(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact_in_rational_mode() {
        assert_eq!(Rational::parse("0.1").unwrap(), Rational::from_ratio(1, 10));
        assert_eq!(Rational::parse("0.26").unwrap(), Rational::from_ratio(13, 50));
        assert_eq!(Rational::parse("2").unwrap(), Rational::from_ratio(2, 1));
        assert_eq!(Rational::parse("1e-2").unwrap(), Rational::from_ratio(1, 100));
        assert_eq!(Rational::parse(".5").unwrap(), Rational::from_ratio(1, 2));
    }

    #[test]
    fn fractions_parse_in_both_modes() {
        assert_eq!(Rational::parse("4/6").unwrap(), Rational::from_ratio(2, 3));
        assert!((f64::parse("1/4").unwrap() - 0.25).abs() < 1e-15);
        assert!(Rational::parse("1/0").is_err());
        assert!(f64::parse("abc").is_err());
        assert!(Rational::parse("1.2.3").is_err());
    }

    #[test]
    fn canonical_text() {
        assert_eq!(Rational::from_ratio(9, 13).to_text(), "9/13");
        assert_eq!(Rational::from_ratio(4, 4).to_text(), "1");
        assert_eq!(0.1f64.to_text(), "0.1");
        assert_eq!(Rational::from_ratio(1, 2).to_json(), serde_json::json!("1/2"));
        assert_eq!(0.5f64.to_json(), serde_json::json!(0.5));
    }

    #[test]
    fn float_closeness_respects_tolerance() {
        assert!(0.3f64.close(&(0.1 + 0.2), TAU_CMP));
        assert!(!0.3f64.close(&0.31, TAU_CMP));
        assert!((0.1f64 + 0.2 + 0.7).is_unit_mass());
    }
}
