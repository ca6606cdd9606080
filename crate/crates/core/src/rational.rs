//! Exact rational arithmetic with a machine-word fast path.
//!
//! [`Rat`] is the sole numeric type used throughout this crate. Semantically
//! it is an arbitrary-precision rational; representationally it keeps the
//! numerator and denominator in two `i64`s whenever they fit and only spills
//! to a heap-allocated [`BigRational`] when an operation overflows. Interpreting
//! long gate programs performs tens of millions of rational operations, and
//! the small path avoids a heap allocation per gate.
//!
//! Invariants maintained by every constructor and operation:
//!
//! * values are always fully reduced (`gcd(|num|, den) == 1`) with a strictly
//!   positive denominator, so derived structural equality is value equality;
//! * the big representation is used only for values that do **not** fit the
//!   small one, so a value has exactly one representation.
//!
//! Displayed and serialized form is `"p/q"` (or just `"p"` for integers);
//! parsing additionally accepts decimal literals such as `"0.125"`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational number.
///
/// See the [module documentation](self) for representation details. All
/// arithmetic is exact; operations never round or overflow (they promote to
/// arbitrary precision instead).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rat(Repr);

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    /// Reduced fraction `num / den` with `den > 0`.
    Small(i64, i64),
    /// Reduced fraction that does not fit in the small representation.
    Big(Box<BigRational>),
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rat {
    /// The value `0`.
    pub fn zero() -> Self {
        Rat(Repr::Small(0, 1))
    }

    /// The value `1`.
    pub fn one() -> Self {
        Rat(Repr::Small(1, 1))
    }

    /// Builds the rational `num / den`, reducing to lowest terms.
    ///
    /// # Panics
    /// Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "rational with zero denominator");
        Self::from_i128_pair(num as i128, den as i128)
    }

    /// Builds the integer rational `n`.
    pub fn int(n: i64) -> Self {
        Rat(Repr::Small(n, 1))
    }

    /// `2^exp` as an exact rational; `exp` may be negative.
    pub fn pow2(exp: i32) -> Self {
        Rat::int(2).pow(exp)
    }

    /// Raises `self` to an integer power; negative powers invert.
    ///
    /// # Panics
    /// Panics when raising zero to a negative power.
    pub fn pow(&self, exp: i32) -> Self {
        if exp == 0 {
            return Rat::one();
        }
        let base = if exp < 0 {
            assert!(!self.is_zero(), "zero to a negative power");
            Rat::one() / self.clone()
        } else {
            self.clone()
        };
        let mut acc = Rat::one();
        for _ in 0..exp.unsigned_abs() {
            acc = &acc * &base;
        }
        acc
    }

    fn from_i128_pair(mut num: i128, mut den: i128) -> Self {
        debug_assert!(den != 0);
        if den < 0 {
            num = -num;
            den = -den;
        }
        let g = gcd_u128(num.unsigned_abs(), den as u128);
        if g > 1 {
            num /= g as i128;
            den /= g as i128;
        }
        if let (Ok(n), Ok(d)) = (i64::try_from(num), i64::try_from(den)) {
            Rat(Repr::Small(n, d))
        } else {
            Rat(Repr::Big(Box::new(BigRational::new(
                BigInt::from(num),
                BigInt::from(den),
            ))))
        }
    }

    /// Builds from an arbitrary-precision rational, demoting to the small
    /// representation when it fits.
    pub fn from_big(r: BigRational) -> Self {
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            Rat(Repr::Small(n, d))
        } else {
            Rat(Repr::Big(Box::new(r)))
        }
    }

    /// The value as an arbitrary-precision rational.
    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (**b).clone(),
        }
    }

    /// True when the value is exactly zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    /// True when the value is negative.
    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    /// True when the denominator is `1`.
    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    /// The value as an `i64`, when it is an integer that fits.
    pub fn as_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(n, 1) => Some(*n),
            Repr::Small(..) => None,
            Repr::Big(b) => {
                if b.is_integer() {
                    b.numer().to_i64()
                } else {
                    None
                }
            }
        }
    }

    /// Largest integer `≤ self`, as a big integer.
    pub fn floor_big(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => BigInt::from(n.div_euclid(*d)),
            Repr::Big(b) => b.floor().to_integer(),
        }
    }

    /// Largest integer `≤ self`, when it fits an `i64`.
    pub fn floor_i64(&self) -> Option<i64> {
        self.floor_big().to_i64()
    }

    /// Smallest integer `≥ self`, as a big integer.
    pub fn ceil_big(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => BigInt::from(n.div_euclid(*d) + i64::from(n.rem_euclid(*d) != 0)),
            Repr::Big(b) => b.ceil().to_integer(),
        }
    }

    /// Absolute value.
    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// The smaller of two values.
    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// The larger of two values.
    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Approximate `f64` value, for human-readable reporting only.
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Saturating addition clipped from above: `min(self + rhs, bound)`.
    pub fn add_clip(&self, rhs: &Rat, bound: &Rat) -> Rat {
        let sum = self + rhs;
        if sum > *bound {
            bound.clone()
        } else {
            sum
        }
    }

    /// Truncated subtraction clipped from below: `max(self - rhs, 0)`.
    pub fn sub_clip(&self, rhs: &Rat) -> Rat {
        if rhs >= self {
            Rat::zero()
        } else {
            self - rhs
        }
    }

    /// Scaling clipped from above: `min(self * factor, bound)`.
    ///
    /// The factor must be non-negative (this is a caller invariant enforced
    /// wherever gate programs are validated; here it is only debug-checked).
    pub fn mul_clip(&self, factor: &Rat, bound: &Rat) -> Rat {
        debug_assert!(!factor.is_negative(), "scaling factor must be non-negative");
        let prod = self * factor;
        if prod > *bound {
            bound.clone()
        } else {
            prod
        }
    }

    fn big_binop(a: &Rat, b: &Rat, f: impl Fn(BigRational, BigRational) -> BigRational) -> Rat {
        Rat::from_big(f(a.to_big(), b.to_big()))
    }
}

impl Default for Rat {
    fn default() -> Self {
        Rat::zero()
    }
}

impl Add for &Rat {
    type Output = Rat;
    fn add(self, rhs: &Rat) -> Rat {
        if let (Repr::Small(n1, d1), Repr::Small(n2, d2)) = (&self.0, &rhs.0) {
            let (n1, d1, n2, d2) = (*n1 as i128, *d1 as i128, *n2 as i128, *d2 as i128);
            if let (Some(a), Some(b), Some(d)) =
                (n1.checked_mul(d2), n2.checked_mul(d1), d1.checked_mul(d2))
            {
                if let Some(n) = a.checked_add(b) {
                    return Rat::from_i128_pair(n, d);
                }
            }
        }
        Rat::big_binop(self, rhs, |a, b| a + b)
    }
}

impl Sub for &Rat {
    type Output = Rat;
    fn sub(self, rhs: &Rat) -> Rat {
        if let (Repr::Small(n1, d1), Repr::Small(n2, d2)) = (&self.0, &rhs.0) {
            let (n1, d1, n2, d2) = (*n1 as i128, *d1 as i128, *n2 as i128, *d2 as i128);
            if let (Some(a), Some(b), Some(d)) =
                (n1.checked_mul(d2), n2.checked_mul(d1), d1.checked_mul(d2))
            {
                if let Some(n) = a.checked_sub(b) {
                    return Rat::from_i128_pair(n, d);
                }
            }
        }
        Rat::big_binop(self, rhs, |a, b| a - b)
    }
}

impl Mul for &Rat {
    type Output = Rat;
    fn mul(self, rhs: &Rat) -> Rat {
        if let (Repr::Small(n1, d1), Repr::Small(n2, d2)) = (&self.0, &rhs.0) {
            let (n1, d1, n2, d2) = (*n1 as i128, *d1 as i128, *n2 as i128, *d2 as i128);
            if let (Some(n), Some(d)) = (n1.checked_mul(n2), d1.checked_mul(d2)) {
                return Rat::from_i128_pair(n, d);
            }
        }
        Rat::big_binop(self, rhs, |a, b| a * b)
    }
}

impl Div for &Rat {
    type Output = Rat;
    fn div(self, rhs: &Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        if let (Repr::Small(n1, d1), Repr::Small(n2, d2)) = (&self.0, &rhs.0) {
            let (n1, d1, n2, d2) = (*n1 as i128, *d1 as i128, *n2 as i128, *d2 as i128);
            if let (Some(n), Some(d)) = (n1.checked_mul(d2), d1.checked_mul(n2)) {
                return Rat::from_i128_pair(n, d);
            }
        }
        Rat::big_binop(self, rhs, |a, b| a / b)
    }
}

macro_rules! forward_owned_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);
forward_owned_binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match self.0 {
            Repr::Small(n, d) => Rat::from_i128_pair(-(n as i128), d as i128),
            Repr::Big(b) => Rat::from_big(-*b),
        }
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        -self.clone()
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(n1, d1), Repr::Small(n2, d2)) => {
                // Denominators are < 2^63, so the cross products fit i128.
                let lhs = (*n1 as i128) * (*d2 as i128);
                let rhs = (*n2 as i128) * (*d1 as i128);
                lhs.cmp(&rhs)
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rat({self})")
    }
}

/// Error returned when a string is not a valid rational literal.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {input:?}: {reason}")]
pub struct ParseRatError {
    /// The offending input.
    pub input: String,
    /// Human-readable cause.
    pub reason: &'static str,
}

impl ParseRatError {
    fn new(input: &str, reason: &'static str) -> Self {
        ParseRatError {
            input: input.to_owned(),
            reason,
        }
    }
}

impl FromStr for Rat {
    type Err = ParseRatError;

    /// Parses `"p"`, `"p/q"`, or a decimal such as `"0.125"`; an optional
    /// leading `-` is accepted in each position a number starts.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseRatError::new(s, "empty string"));
        }
        if let Some((num, den)) = s.split_once('/') {
            let n = parse_bigint(num).ok_or_else(|| ParseRatError::new(s, "bad numerator"))?;
            let d = parse_bigint(den).ok_or_else(|| ParseRatError::new(s, "bad denominator"))?;
            if d.is_zero() {
                return Err(ParseRatError::new(s, "zero denominator"));
            }
            return Ok(Rat::from_big(BigRational::new(n, d)));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let (sign, int_digits) = match int.strip_prefix('-') {
                Some(rest) => (Sign::Minus, rest),
                None => (Sign::Plus, int),
            };
            if !int_digits.chars().all(|c| c.is_ascii_digit())
                || !frac.chars().all(|c| c.is_ascii_digit())
                || (int_digits.is_empty() && frac.is_empty())
            {
                return Err(ParseRatError::new(s, "bad decimal"));
            }
            let digits: String = format!("{int_digits}{frac}");
            let n = if digits.is_empty() {
                BigInt::zero()
            } else {
                digits
                    .parse::<BigInt>()
                    .map_err(|_| ParseRatError::new(s, "bad decimal"))?
            };
            let n = if sign == Sign::Minus { -n } else { n };
            let d = BigInt::from(10u32).pow(frac.len() as u32);
            return Ok(Rat::from_big(BigRational::new(n, d)));
        }
        let n = parse_bigint(s).ok_or_else(|| ParseRatError::new(s, "bad integer"))?;
        Ok(Rat::from_big(BigRational::from_integer(n)))
    }
}

fn parse_bigint(s: &str) -> Option<BigInt> {
    let s = s.trim();
    let body = s.strip_prefix('-').unwrap_or(s);
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RatVisitor;
        impl de::Visitor<'_> for RatVisitor {
            type Value = Rat;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as a \"p/q\" string or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                v.parse().map_err(de::Error::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat::int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                i64::try_from(v)
                    .map(Rat::int)
                    .map_err(|_| de::Error::custom("integer too large"))
            }
        }
        deserializer.deserialize_any(RatVisitor)
    }
}

/// Convenience conversion from small integers.
impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::int(n)
    }
}
