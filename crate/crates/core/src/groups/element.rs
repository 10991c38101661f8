use std::fmt;

use serde::{Serialize, Serializer};

use crate::fields::{LogAbs, Place, ValuedScalar};

use super::GroupError;

/// The affine map `t -> lambda * t + c`, stored as the pair `(c, lambda)`.
///
/// Composition follows `c(xy) = c(x) + lambda(x) c(y)` and
/// `lambda(xy) = lambda(x) lambda(y)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineElement {
    c: ValuedScalar,
    lambda: ValuedScalar,
}

impl AffineElement {
    pub fn new(c: ValuedScalar, lambda: ValuedScalar) -> Result<Self, GroupError> {
        if c.place() != lambda.place() {
            return Err(GroupError::Field(crate::fields::FieldError::PlaceMismatch));
        }
        if lambda.is_zero() {
            return Err(GroupError::ZeroLambda);
        }
        Ok(AffineElement { c, lambda })
    }

    pub fn identity(place: Place) -> Self {
        AffineElement {
            c: ValuedScalar::zero(place),
            lambda: ValuedScalar::one(place),
        }
    }

    /// `(c, 1)`.
    pub fn translation(c: ValuedScalar) -> Self {
        let place = c.place();
        AffineElement {
            c,
            lambda: ValuedScalar::one(place),
        }
    }

    /// `(0, lambda)`.
    pub fn dilation(lambda: ValuedScalar) -> Result<Self, GroupError> {
        Self::new(ValuedScalar::zero(lambda.place()), lambda)
    }

    pub fn place(&self) -> Place {
        self.c.place()
    }

    pub fn c(&self) -> &ValuedScalar {
        &self.c
    }

    pub fn lambda(&self) -> &ValuedScalar {
        &self.lambda
    }

    pub fn is_identity(&self) -> bool {
        self.c.is_zero() && self.lambda.is_one()
    }

    pub fn mul(&self, other: &Self) -> Result<Self, GroupError> {
        let c = self.c.add(&self.lambda.mul(&other.c)?)?;
        let lambda = self.lambda.mul(&other.lambda)?;
        Ok(AffineElement { c, lambda })
    }

    pub fn inverse(&self) -> Self {
        let inv = self.lambda.inv().expect("lambda is never zero");
        let c = inv.mul(&self.c).expect("same place").neg();
        AffineElement { c, lambda: inv }
    }

    pub fn pow(&self, k: i64) -> Self {
        let mut base = if k < 0 { self.inverse() } else { self.clone() };
        let mut exp = k.unsigned_abs();
        let mut acc = Self::identity(self.place());
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base).expect("same place");
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base).expect("same place");
            }
        }
        acc
    }

    /// `h^{-1} x h`.
    pub fn conjugate_by(&self, h: &Self) -> Result<Self, GroupError> {
        h.inverse().mul(self)?.mul(h)
    }

    /// `rho(x) = -log |lambda(x)|`.
    pub fn rho(&self) -> LogAbs {
        -self.lambda.abs_value()
    }

    pub fn c_abs(&self) -> LogAbs {
        self.c.abs_value()
    }

    /// Parses the `(c; lambda)` literal.
    pub fn parse(s: &str, place: Place) -> Result<Self, GroupError> {
        let bad = || GroupError::MalformedElement(s.to_string());
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (c, lambda) = inner.split_once(';').ok_or_else(bad)?;
        let c = ValuedScalar::parse(c, place)?;
        let lambda = ValuedScalar::parse(lambda, place)?;
        Self::new(c, lambda)
    }
}

/// Serializes as the `(c; lambda)` literal accepted by [`AffineElement::parse`].
impl Serialize for AffineElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for AffineElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; {})", self.c, self.lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(c: (i64, i64), l: (i64, i64)) -> AffineElement {
        AffineElement::new(
            ValuedScalar::from_ratio(c.0, c.1, Place::Archimedean),
            ValuedScalar::from_ratio(l.0, l.1, Place::Archimedean),
        )
        .unwrap()
    }

    #[test]
    fn composition_law() {
        let id = AffineElement::identity(Place::Archimedean);
        let g = el((3, 7), (-2, 5));
        assert_eq!(id.mul(&g).unwrap(), g);
        assert_eq!(
            el((0, 1), (2, 1)).mul(&el((1, 1), (1, 1))).unwrap(),
            el((2, 1), (2, 1))
        );
        assert_eq!(el((1, 1), (2, 1)).mul(&el((-1, 2), (1, 2))).unwrap(), id);
        assert_eq!(el((1, 1), (2, 1)).inverse(), el((-1, 2), (1, 2)));
    }

    #[test]
    fn rho_values() {
        assert_eq!(
            AffineElement::identity(Place::Archimedean).rho(),
            LogAbs::ZERO
        );
        assert_eq!(el((0, 1), (2, 1)).rho(), LogAbs::exact(-1, 2));
        let t = AffineElement::dilation(ValuedScalar::laurent(
            crate::fields::LaurentRational::monomial(1, 1, 2),
        ))
        .unwrap();
        assert_eq!(t.rho(), LogAbs::exact(-1, 2));
    }

    #[test]
    fn zero_lambda_rejected() {
        let r = AffineElement::new(
            ValuedScalar::from_int(1, Place::Archimedean),
            ValuedScalar::from_int(0, Place::Archimedean),
        );
        assert!(matches!(r, Err(GroupError::ZeroLambda)));
    }

    #[test]
    fn literal_round_trip() {
        let g = el((-3, 4), (2, 1));
        assert_eq!(g.to_string(), "(-3/4; 2)");
        assert_eq!(
            AffineElement::parse(&g.to_string(), Place::Archimedean).unwrap(),
            g
        );
    }
}
