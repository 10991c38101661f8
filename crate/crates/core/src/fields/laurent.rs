//! Rational functions over F_p, used as Laurent rationals with the degree
//! valuation at infinity.

use std::fmt;

use super::poly::{reduce_i64, write_sparse, FpPoly};
use super::FieldError;

/// `num / den` with `den` monic and `gcd(num, den) = 1`. Zero is `0 / 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LaurentRational {
    num: FpPoly,
    den: FpPoly,
}

impl LaurentRational {
    pub fn zero(p: u32) -> Self {
        LaurentRational {
            num: FpPoly::zero(p),
            den: FpPoly::one(p),
        }
    }

    pub fn one(p: u32) -> Self {
        Self::from_int(1, p)
    }

    pub fn from_int(n: i64, p: u32) -> Self {
        LaurentRational {
            num: FpPoly::constant(reduce_i64(n, p), p),
            den: FpPoly::one(p),
        }
    }

    /// `c * x^k` for any integer k.
    pub fn monomial(c: i64, k: i64, p: u32) -> Self {
        let c = reduce_i64(c, p);
        if c == 0 {
            return Self::zero(p);
        }
        if k >= 0 {
            LaurentRational {
                num: FpPoly::monomial(c, k as usize, p),
                den: FpPoly::one(p),
            }
        } else {
            LaurentRational {
                num: FpPoly::constant(c, p),
                den: FpPoly::monomial(1, (-k) as usize, p),
            }
        }
    }

    /// Builds `sum coeff_k x^k` from sparse `(k, coeff)` pairs with arbitrary
    /// (possibly negative) exponents.
    pub fn from_sparse(terms: &[(i64, i64)], p: u32) -> Self {
        let low = terms.iter().map(|&(k, _)| k).min().unwrap_or(0).min(0);
        let high = terms.iter().map(|&(k, _)| k).max().unwrap_or(0).max(0);
        let mut coeffs = vec![0u32; (high - low + 1) as usize];
        for &(k, c) in terms {
            let slot = &mut coeffs[(k - low) as usize];
            *slot = ((*slot as u64 + reduce_i64(c, p) as u64) % p as u64) as u32;
        }
        let num = FpPoly::from_coeffs(coeffs, p);
        let den = FpPoly::monomial(1, (-low) as usize, p);
        Self::normalized(num, den)
    }

    pub fn from_parts(num: FpPoly, den: FpPoly) -> Result<Self, FieldError> {
        if den.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        if num.characteristic() != den.characteristic() {
            return Err(FieldError::PlaceMismatch);
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(num: FpPoly, den: FpPoly) -> Self {
        let p = num.characteristic();
        if num.is_zero() {
            return Self::zero(p);
        }
        let g = num.gcd(&den);
        let (num, _) = num.div_rem(&g);
        let (den, _) = den.div_rem(&g);
        let lead = den.leading();
        if lead == 1 {
            LaurentRational { num, den }
        } else {
            let inv = super::poly::inv_mod(lead, p);
            LaurentRational {
                num: num.scale(inv),
                den: den.scale(inv),
            }
        }
    }

    pub fn characteristic(&self) -> u32 {
        self.num.characteristic()
    }

    pub fn numerator(&self) -> &FpPoly {
        &self.num
    }

    pub fn denominator(&self) -> &FpPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self::normalized(self.num.add(&other.num), self.den.clone());
        }
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        Self::normalized(num, self.den.mul(&other.den))
    }

    pub fn neg(&self) -> Self {
        LaurentRational {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::normalized(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn inv(&self) -> Result<Self, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone()))
    }

    /// `deg num - deg den`; `None` for zero.
    pub fn degree(&self) -> Option<i64> {
        Some(self.num.degree()? as i64 - self.den.degree().unwrap() as i64)
    }

    /// Exponent of x in the denominator when the value is a Laurent polynomial.
    pub fn laurent_shift(&self) -> Option<usize> {
        self.den.as_monic_monomial()
    }

    /// Sparse `(exponent, coefficient)` terms when the value is a Laurent
    /// polynomial, lowest exponent first.
    pub fn laurent_terms(&self) -> Option<Vec<(i64, u32)>> {
        let shift = self.laurent_shift()? as i64;
        Some(
            self.num
                .terms()
                .map(|(k, c)| (k as i64 - shift, c))
                .collect(),
        )
    }
}

impl fmt::Display for LaurentRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.laurent_shift() {
            Some(shift) => write_sparse(f, &self.num, -(shift as i64)),
            None => {
                write!(f, "(")?;
                write_sparse(f, &self.num, 0)?;
                write!(f, ")/(")?;
                write_sparse(f, &self.den, 0)?;
                write!(f, ")")
            }
        }
    }
}

fn parse_sparse(s: &str, p: u32) -> Result<LaurentRational, FieldError> {
    let bad = || FieldError::Parse(s.to_string());
    let mut terms = Vec::new();
    for raw in s.split('+') {
        let term: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        if term.is_empty() {
            return Err(bad());
        }
        let (coeff, exp) = match term.find('x') {
            None => (term.parse::<i64>().map_err(|_| bad())?, 0),
            Some(pos) => {
                let head = &term[..pos];
                let coeff = match head {
                    "" => 1,
                    "-" => -1,
                    h => h
                        .strip_suffix('*')
                        .ok_or_else(bad)?
                        .parse::<i64>()
                        .map_err(|_| bad())?,
                };
                let tail = &term[pos + 1..];
                let exp = if tail.is_empty() {
                    1
                } else {
                    tail.strip_prefix('^')
                        .ok_or_else(bad)?
                        .parse::<i64>()
                        .map_err(|_| bad())?
                };
                (coeff, exp)
            }
        };
        terms.push((exp, coeff));
    }
    Ok(LaurentRational::from_sparse(&terms, p))
}

impl LaurentRational {
    /// Parses the sparse `c_k*x^k + ...` form or `(num)/(den)`.
    pub fn parse(s: &str, p: u32) -> Result<Self, FieldError> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('(') {
            let (num, den) = rest
                .split_once(")/(")
                .ok_or_else(|| FieldError::Parse(s.into()))?;
            let den = den
                .strip_suffix(')')
                .ok_or_else(|| FieldError::Parse(s.into()))?;
            let num = parse_sparse(num, p)?;
            let den = parse_sparse(den, p)?;
            return Ok(num.mul(&den.inv()?));
        }
        parse_sparse(s, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_product() {
        let x = LaurentRational::monomial(1, 1, 2);
        let x2 = LaurentRational::monomial(1, 2, 2);
        assert_eq!(x.mul(&x2), LaurentRational::monomial(1, 3, 2));
    }

    #[test]
    fn negative_powers_cancel() {
        let x = LaurentRational::monomial(1, 1, 3);
        let inv = x.inv().unwrap();
        assert_eq!(inv, LaurentRational::monomial(1, -1, 3));
        assert_eq!(x.mul(&inv), LaurentRational::one(3));
    }

    #[test]
    fn display_round_trip() {
        let v = LaurentRational::from_sparse(&[(3, 1), (0, 2), (-2, 4)], 5);
        let text = v.to_string();
        assert_eq!(text, "1*x^3 + 2 + 4*x^-2");
        assert_eq!(LaurentRational::parse(&text, 5).unwrap(), v);

        let q = LaurentRational::one(3).mul(
            &LaurentRational::from_sparse(&[(1, 1), (0, 1)], 3)
                .inv()
                .unwrap(),
        );
        assert_eq!(LaurentRational::parse(&q.to_string(), 3).unwrap(), q);
    }

    #[test]
    fn subtraction_to_zero_is_canonical() {
        let a = LaurentRational::from_sparse(&[(1, 1), (0, 1)], 7).mul(
            &LaurentRational::from_sparse(&[(2, 3), (0, 1)], 7)
                .inv()
                .unwrap(),
        );
        assert_eq!(a.add(&a.neg()), LaurentRational::zero(7));
    }
}
