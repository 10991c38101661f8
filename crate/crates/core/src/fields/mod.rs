//! Exact valued fields: rationals at an archimedean or p-adic place, and
//! rational functions over F_p at the place at infinity.
//!
//! Every [`ValuedScalar`] carries its [`Place`], and [`ValuedScalar::abs_value`]
//! returns the logarithm of the multiplicative absolute value as a
//! [`LogAbs`]. Whenever `|a|` is an integer power of a fixed base the log is
//! kept exact as `k * log(base)` so that threshold comparisons on it never
//! drift.

mod laurent;
mod logabs;
mod poly;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use laurent::LaurentRational;
pub use logabs::LogAbs;
pub use poly::FpPoly;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("operands live at different places")]
    PlaceMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not a prime below 2^31")]
    NotPrime(u64),
    #[error("cannot parse field element `{0}`")]
    Parse(String),
    #[error("unknown place `{0}`")]
    UnknownPlace(String),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn checked_prime(p: u64) -> Result<u32, FieldError> {
    if p < (1 << 31) && is_prime(p) {
        Ok(p as u32)
    } else {
        Err(FieldError::NotPrime(p))
    }
}

/// The absolute value a field is equipped with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Place {
    /// Usual absolute value on Q.
    Archimedean,
    /// `|a| = p^{-v_p(a)}` on Q.
    PAdic(u32),
    /// `|f/g| = p^{deg f - deg g}` on F_p(x).
    LaurentInfinity(u32),
}

impl Place {
    pub fn padic(p: u64) -> Result<Self, FieldError> {
        Ok(Place::PAdic(checked_prime(p)?))
    }

    pub fn laurent(p: u64) -> Result<Self, FieldError> {
        Ok(Place::LaurentInfinity(checked_prime(p)?))
    }

    pub fn is_archimedean(&self) -> bool {
        matches!(self, Place::Archimedean)
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Archimedean => write!(f, "arch"),
            Place::PAdic(p) => write!(f, "padic:{p}"),
            Place::LaurentInfinity(p) => write!(f, "laurent:{p}"),
        }
    }
}

impl FromStr for Place {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "arch" {
            return Ok(Place::Archimedean);
        }
        let (kind, p) = s
            .split_once(':')
            .ok_or_else(|| FieldError::UnknownPlace(s.into()))?;
        let p: u64 = p.parse().map_err(|_| FieldError::UnknownPlace(s.into()))?;
        match kind {
            "padic" => Place::padic(p),
            "laurent" => Place::laurent(p),
            _ => Err(FieldError::UnknownPlace(s.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Value {
    Rational(BigRational),
    Laurent(LaurentRational),
}

/// An exact field element together with the place defining its absolute
/// value. Values are immutable and always kept in normal form, so derived
/// equality and hashing are structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValuedScalar {
    value: Value,
    place: Place,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Mul,
    Neg,
    Inv,
}

/// Applies `op` to `a` (and `b` for binary operations).
pub fn field_arith(
    a: &ValuedScalar,
    b: &ValuedScalar,
    op: FieldOp,
) -> Result<ValuedScalar, FieldError> {
    match op {
        FieldOp::Add => a.add(b),
        FieldOp::Mul => a.mul(b),
        FieldOp::Neg => Ok(a.neg()),
        FieldOp::Inv => a.inv(),
    }
}

impl ValuedScalar {
    pub fn rational(q: BigRational, place: Place) -> Self {
        assert!(
            !matches!(place, Place::LaurentInfinity(_)),
            "rationals need an archimedean or p-adic place"
        );
        ValuedScalar {
            value: Value::Rational(q),
            place,
        }
    }

    pub fn laurent(v: LaurentRational) -> Self {
        let p = v.characteristic();
        ValuedScalar {
            value: Value::Laurent(v),
            place: Place::LaurentInfinity(p),
        }
    }

    pub fn from_ratio(num: i64, den: i64, place: Place) -> Self {
        Self::rational(BigRational::new(num.into(), den.into()), place)
    }

    /// The image of the integer `n` in the field of `place`.
    pub fn from_int(n: i64, place: Place) -> Self {
        match place {
            Place::LaurentInfinity(p) => Self::laurent(LaurentRational::from_int(n, p)),
            _ => Self::rational(BigRational::from_integer(n.into()), place),
        }
    }

    pub fn zero(place: Place) -> Self {
        Self::from_int(0, place)
    }

    pub fn one(place: Place) -> Self {
        Self::from_int(1, place)
    }

    pub fn place(&self) -> Place {
        self.place
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match &self.value {
            Value::Rational(q) => Some(q),
            Value::Laurent(_) => None,
        }
    }

    pub fn as_laurent(&self) -> Option<&LaurentRational> {
        match &self.value {
            Value::Laurent(v) => Some(v),
            Value::Rational(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.value {
            Value::Rational(q) => q.is_zero(),
            Value::Laurent(v) => v.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        *self == Self::one(self.place)
    }

    fn same_place(&self, other: &Self) -> Result<(), FieldError> {
        if self.place == other.place {
            Ok(())
        } else {
            Err(FieldError::PlaceMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_place(other)?;
        let value = match (&self.value, &other.value) {
            (Value::Rational(a), Value::Rational(b)) => Value::Rational(a + b),
            (Value::Laurent(a), Value::Laurent(b)) => Value::Laurent(a.add(b)),
            _ => return Err(FieldError::PlaceMismatch),
        };
        Ok(ValuedScalar {
            value,
            place: self.place,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_place(other)?;
        let value = match (&self.value, &other.value) {
            (Value::Rational(a), Value::Rational(b)) => Value::Rational(a * b),
            (Value::Laurent(a), Value::Laurent(b)) => Value::Laurent(a.mul(b)),
            _ => return Err(FieldError::PlaceMismatch),
        };
        Ok(ValuedScalar {
            value,
            place: self.place,
        })
    }

    pub fn neg(&self) -> Self {
        let value = match &self.value {
            Value::Rational(a) => Value::Rational(-a),
            Value::Laurent(a) => Value::Laurent(a.neg()),
        };
        ValuedScalar {
            value,
            place: self.place,
        }
    }

    pub fn inv(&self) -> Result<Self, FieldError> {
        let value = match &self.value {
            Value::Rational(a) if a.is_zero() => return Err(FieldError::DivisionByZero),
            Value::Rational(a) => Value::Rational(a.recip()),
            Value::Laurent(a) => Value::Laurent(a.inv()?),
        };
        Ok(ValuedScalar {
            value,
            place: self.place,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self, FieldError> {
        self.mul(&other.inv()?)
    }

    /// `self^k` for any integer k (negative powers need a nonzero base).
    pub fn pow(&self, k: i64) -> Result<Self, FieldError> {
        let mut base = if k < 0 { self.inv()? } else { self.clone() };
        let mut exp = k.unsigned_abs();
        let mut acc = Self::one(self.place);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Logarithm of the multiplicative absolute value at this element's place.
    pub fn abs_value(&self) -> LogAbs {
        if self.is_zero() {
            return LogAbs::NegInfinity;
        }
        match (&self.value, self.place) {
            (Value::Rational(q), Place::Archimedean) => archimedean_log_abs(q),
            (Value::Rational(q), Place::PAdic(p)) => {
                let v = valuation(q.numer(), p) - valuation(q.denom(), p);
                LogAbs::exact(-v, p as u64)
            }
            (Value::Laurent(v), Place::LaurentInfinity(p)) => {
                LogAbs::exact(v.degree().expect("nonzero"), p as u64)
            }
            _ => unreachable!("value kind always matches its place"),
        }
    }

    /// Decides `|self| < |t|` for a positive integer threshold `t`, exactly.
    pub fn abs_lt_int(&self, t: u64) -> bool {
        self.abs_cmp_int(t) == Ordering::Less
    }

    /// Compares the real number `|self|` with the real number `t >= 1`,
    /// exactly unless the absolute value is only known as a float.
    pub fn abs_cmp_int(&self, t: u64) -> Ordering {
        if self.is_zero() {
            return Ordering::Less;
        }
        match (&self.value, self.place) {
            (Value::Rational(q), Place::Archimedean) => {
                q.abs().cmp(&BigRational::from_integer(BigInt::from(t)))
            }
            _ => match self.abs_value() {
                LogAbs::Exact { k, base } => int_power_cmp(base, k, t),
                other => other.to_f64().total_cmp(&(t as f64).ln()),
            },
        }
    }

    /// Approximate magnitude as an `f64`, for reporting only.
    pub fn to_f64(&self) -> Option<f64> {
        self.as_rational().map(rational_to_f64)
    }

    /// Parses a serialized element for `place` (`num/den` or the sparse
    /// Laurent form).
    pub fn parse(s: &str, place: Place) -> Result<Self, FieldError> {
        match place {
            Place::LaurentInfinity(p) => Ok(Self::laurent(LaurentRational::parse(s, p)?)),
            _ => Ok(Self::rational(parse_rational(s)?, place)),
        }
    }
}

impl fmt::Display for ValuedScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            Value::Rational(q) => {
                if q.denom().is_one() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            Value::Laurent(v) => write!(f, "{v}"),
        }
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational, FieldError> {
    let s = s.trim();
    let err = || FieldError::Parse(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(FieldError::DivisionByZero);
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| err())?)),
    }
}

/// `base^k < t` for integers, with k possibly negative.
/// `base^k` against `t >= 1`.
fn int_power_cmp(base: u64, k: i64, t: u64) -> Ordering {
    if k <= 0 {
        return if k == 0 || base == 1 {
            1.cmp(&t)
        } else {
            Ordering::Less
        };
    }
    let mut acc: u128 = 1;
    for _ in 0..k {
        acc *= base as u128;
        if acc > t as u128 {
            return Ordering::Greater;
        }
    }
    acc.cmp(&(t as u128))
}

fn valuation(n: &BigInt, p: u32) -> i64 {
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

pub(crate) fn bigint_ln(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        if let Some(f) = n.abs().to_f64() {
            return f.ln();
        }
    }
    let shift = bits.saturating_sub(64);
    let top = (n.abs() >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    let sign = if q.numer().sign() == Sign::Minus {
        -1.0
    } else {
        1.0
    };
    sign * (bigint_ln(q.numer()) - bigint_ln(q.denom())).exp()
}

/// Smallest integer `b` with `n = b^k`, returned as `(b, k)`.
fn perfect_power(n: &BigInt) -> Option<(u64, i64)> {
    let bits = n.bits() as u32;
    for k in (1..=bits.max(1)).rev() {
        let root = n.nth_root(k);
        if root.pow(k) == *n {
            return root.to_u64().map(|b| (b, k as i64));
        }
    }
    None
}

fn archimedean_log_abs(q: &BigRational) -> LogAbs {
    let n = q.numer().abs();
    let d = q.denom();
    if n.is_one() && d.is_one() {
        return LogAbs::exact(0, 1);
    }
    if d.is_one() {
        if let Some((b, k)) = perfect_power(&n) {
            return LogAbs::exact(k, b);
        }
    } else if n.is_one() {
        if let Some((b, k)) = perfect_power(d) {
            return LogAbs::exact(-k, b);
        }
    }
    LogAbs::Float(bigint_ln(&n) - bigint_ln(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> ValuedScalar {
        ValuedScalar::from_ratio(n, d, Place::Archimedean)
    }

    #[test]
    fn half_plus_half() {
        assert_eq!(
            field_arith(&q(1, 2), &q(1, 2), FieldOp::Add).unwrap(),
            q(1, 1)
        );
    }

    #[test]
    fn laurent_monomials_multiply() {
        let x = ValuedScalar::laurent(LaurentRational::monomial(1, 1, 2));
        let x2 = ValuedScalar::laurent(LaurentRational::monomial(1, 2, 2));
        let x3 = ValuedScalar::laurent(LaurentRational::monomial(1, 3, 2));
        assert_eq!(field_arith(&x, &x2, FieldOp::Mul).unwrap(), x3);
    }

    #[test]
    fn zero_has_no_inverse() {
        let zero = q(0, 1);
        assert_eq!(
            field_arith(&zero, &zero, FieldOp::Inv),
            Err(FieldError::DivisionByZero)
        );
        let lz = ValuedScalar::zero(Place::LaurentInfinity(3));
        assert_eq!(lz.inv(), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn mixed_places_rejected() {
        let a = q(1, 2);
        let b = ValuedScalar::from_ratio(1, 2, Place::PAdic(2));
        assert_eq!(a.add(&b), Err(FieldError::PlaceMismatch));
    }

    #[test]
    fn absolute_values() {
        assert_eq!(q(2, 1).abs_value(), LogAbs::exact(1, 2));
        assert!((q(2, 1).abs_value().to_f64() - 2f64.ln()).abs() < 1e-15);
        let x3 = ValuedScalar::laurent(LaurentRational::monomial(1, 3, 2));
        assert_eq!(x3.abs_value(), LogAbs::exact(3, 2));
        let eight = ValuedScalar::from_int(8, Place::PAdic(2));
        assert_eq!(eight.abs_value(), LogAbs::exact(-3, 2));
        assert_eq!(q(0, 1).abs_value(), LogAbs::NegInfinity);
        assert_eq!(q(-1, 8).abs_value(), LogAbs::exact(-3, 2));
        assert_eq!(q(6, 1).abs_value(), LogAbs::exact(1, 6));
        assert!(matches!(q(6, 5).abs_value(), LogAbs::Float(_)));
    }

    #[test]
    fn eight_two_adic_matches_factorization() {
        // v_2(8) by repeated halving.
        let mut n = 8u64;
        let mut v = 0;
        while n.is_multiple_of(2) {
            n /= 2;
            v += 1;
        }
        assert_eq!(
            ValuedScalar::from_int(8, Place::PAdic(2)).abs_value(),
            LogAbs::exact(-v, 2)
        );
    }

    #[test]
    fn threshold_comparisons_are_exact() {
        assert!(q(5, 2).abs_lt_int(3));
        assert!(!q(3, 1).abs_lt_int(3));
        assert!(q(-29999, 10000).abs_lt_int(3));
        let x = ValuedScalar::laurent(LaurentRational::monomial(1, 1, 2));
        let x2 = ValuedScalar::laurent(LaurentRational::monomial(1, 2, 2));
        assert!(x.abs_lt_int(3));
        assert!(!x2.abs_lt_int(3));
        let xinv = x.inv().unwrap();
        assert!(xinv.abs_lt_int(3));
        let four_padic = ValuedScalar::from_int(4, Place::PAdic(2));
        assert!(four_padic.abs_lt_int(3));
        assert_eq!(q(2, 1).abs_cmp_int(2), Ordering::Equal);
        assert_eq!(q(-9, 4).abs_cmp_int(2), Ordering::Greater);
        assert_eq!(x2.abs_cmp_int(4), Ordering::Equal);
        assert_eq!(x2.abs_cmp_int(5), Ordering::Less);
        assert_eq!(xinv.abs_cmp_int(1), Ordering::Less);
        assert_eq!(
            ValuedScalar::one(Place::PAdic(3)).abs_cmp_int(1),
            Ordering::Equal
        );
    }

    #[test]
    fn places_parse_and_print() {
        for s in ["arch", "padic:7", "laurent:2"] {
            assert_eq!(s.parse::<Place>().unwrap().to_string(), s);
        }
        assert_eq!("laurent:4".parse::<Place>(), Err(FieldError::NotPrime(4)));
    }

    #[test]
    fn scalars_parse_and_print() {
        let v = q(-3, 4);
        assert_eq!(v.to_string(), "-3/4");
        assert_eq!(ValuedScalar::parse("-3/4", Place::Archimedean).unwrap(), v);
        assert_eq!(
            ValuedScalar::parse("6/8", Place::Archimedean).unwrap(),
            q(3, 4)
        );
    }
}
