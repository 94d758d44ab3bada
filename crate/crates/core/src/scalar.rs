//! Arithmetic backends.
//!
//! Every algorithm in this crate is generic over [`Scalar`], which is
//! implemented for `f64` (tolerance-based comparisons) and for
//! [`Rational`] (arbitrary-precision fractions, exact comparisons).
//! Conversion to binary64 happens only at output.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Absolute tolerance used for float-mode coincidence tests
/// (positions, times, monotonicity).
pub const FLOAT_TOL: f64 = 1e-12;

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact and comparisons need no tolerance.
    const EXACT: bool;
    const NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn ratio(num: i64, den: i64) -> Self;
    /// Exact conversion of a binary64 value (every finite `f64` is a dyadic rational).
    fn from_f64(x: f64) -> Self;
    /// Nearest value of an exact rational.
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    /// Equality up to `tol` in float mode, exact equality in rational mode.
    fn near(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            self == other
        } else {
            (self.clone() - other.clone()).abs().to_f64() <= tol
        }
    }

    /// `self <= other` up to `tol` in float mode.
    fn le_tol(&self, other: &Self, tol: f64) -> bool {
        if Self::EXACT {
            self <= other
        } else {
            self.to_f64() <= other.to_f64() + tol
        }
    }

    /// Zero up to `tol` in float mode.
    fn negligible(&self, tol: f64) -> bool {
        self.near(&Self::zero(), tol)
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other)
            .expect("scalar values are never NaN after validation")
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const NAME: &'static str = "float64";

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const NAME: &'static str = "rational";

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite f64")
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Parses `"p/q"`, `"p"` or a decimal literal such as `"0.375"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    if let Ok(int) = text.parse::<BigInt>() {
        return Some(BigRational::from_integer(int));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = body.split_once('.')?;
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(num, den);
    Some(if neg { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("1/3"), Some(Rational::ratio(1, 3)));
        assert_eq!(parse_rational("-7"), Some(Rational::from_int(-7)));
        assert_eq!(parse_rational("0.375"), Some(Rational::ratio(3, 8)));
        assert_eq!(parse_rational("-.5"), Some(Rational::ratio(-1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("."), None);
    }

    #[test]
    fn float_conversion_is_exact() {
        let r = Rational::from_f64(0.1);
        assert_ne!(r, Rational::ratio(1, 10));
        assert_eq!(Scalar::to_f64(&r), 0.1);
    }

    #[test]
    fn tolerance_only_applies_to_floats() {
        assert!(1.0f64.near(&(1.0 + 1e-13), FLOAT_TOL));
        let a = Rational::ratio(1, 3);
        let b = a.clone() + Rational::ratio(1, 10i64.pow(15));
        assert!(!a.near(&b, FLOAT_TOL));
    }
}
