//! Dense polynomials over the prime field F_p.

use std::fmt;

/// Polynomial with coefficients in F_p, stored little-endian with no
/// trailing zeros. The zero polynomial has an empty coefficient vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FpPoly {
    p: u32,
    coeffs: Vec<u32>,
}

pub(crate) fn mul_mod(a: u32, b: u32, p: u32) -> u32 {
    ((a as u64 * b as u64) % p as u64) as u32
}

pub(crate) fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    let mut result = 1u64;
    let mut base = (a % p) as u64;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p as u64;
        }
        base = base * base % p as u64;
        exp >>= 1;
    }
    result as u32
}

/// Reduces an arbitrary signed integer into `[0, p)`.
pub(crate) fn reduce_i64(n: i64, p: u32) -> u32 {
    n.rem_euclid(p as i64) as u32
}

impl FpPoly {
    pub fn zero(p: u32) -> Self {
        FpPoly {
            p,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(c: u32, p: u32) -> Self {
        Self::from_coeffs(vec![c % p], p)
    }

    pub fn one(p: u32) -> Self {
        Self::constant(1, p)
    }

    /// `c * x^k`
    pub fn monomial(c: u32, k: usize, p: u32) -> Self {
        let mut coeffs = vec![0; k + 1];
        coeffs[k] = c % p;
        Self::from_coeffs(coeffs, p)
    }

    pub fn from_coeffs(mut coeffs: Vec<u32>, p: u32) -> Self {
        for c in coeffs.iter_mut() {
            *c %= p;
        }
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        FpPoly { p, coeffs }
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> u32 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn low_degree(&self) -> Option<usize> {
        self.coeffs.iter().position(|&c| c != 0)
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == 1
    }

    /// True when the polynomial is exactly `x^k` for some k.
    pub fn as_monic_monomial(&self) -> Option<usize> {
        let d = self.degree()?;
        if self.coeffs[d] == 1 && self.coeffs[..d].iter().all(|&c| c == 0) {
            Some(d)
        } else {
            None
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let p = self.p;
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).copied().unwrap_or(0);
            let b = other.coeffs.get(i).copied().unwrap_or(0);
            out.push((a + b) % p);
        }
        Self::from_coeffs(out, p)
    }

    pub fn neg(&self) -> Self {
        let p = self.p;
        let coeffs = self.coeffs.iter().map(|&c| (p - c) % p).collect();
        Self::from_coeffs(coeffs, p)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: u32) -> Self {
        let p = self.p;
        let coeffs = self.coeffs.iter().map(|&a| mul_mod(a, c, p)).collect();
        Self::from_coeffs(coeffs, p)
    }

    /// Multiplies by `x^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![0; k];
        coeffs.extend_from_slice(&self.coeffs);
        FpPoly { p: self.p, coeffs }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let p = self.p as u64;
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.p);
        }
        let mut acc = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                acc[i + j] = (acc[i + j] + a as u64 * b as u64) % p;
            }
        }
        Self::from_coeffs(acc.into_iter().map(|c| c as u32).collect(), self.p)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let p = self.p;
        let dd = divisor.degree().unwrap();
        let lead_inv = inv_mod(divisor.leading(), p);
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Self::zero(p), self.clone());
        }
        let mut quot = vec![0u32; rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = rem[i];
            if c == 0 {
                continue;
            }
            let q = mul_mod(c, lead_inv, p);
            quot[i - dd] = q;
            for (j, &b) in divisor.coeffs.iter().enumerate() {
                let sub = mul_mod(q, b, p);
                rem[i - dd + j] = (rem[i - dd + j] + p - sub) % p;
            }
        }
        (Self::from_coeffs(quot, p), Self::from_coeffs(rem, p))
    }

    pub fn make_monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(inv_mod(self.leading(), self.p))
    }

    /// Monic greatest common divisor (zero when both are zero).
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.make_monic()
    }

    /// Evaluates the polynomial as a sparse list of `(exponent, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (i, c))
    }
}

/// Writes `sum c_k*x^k` with exponents shifted by `offset`, highest first.
pub(crate) fn write_sparse(f: &mut fmt::Formatter<'_>, poly: &FpPoly, offset: i64) -> fmt::Result {
    if poly.is_zero() {
        return write!(f, "0");
    }
    let mut terms: Vec<(i64, u32)> = poly.terms().map(|(k, c)| (k as i64 + offset, c)).collect();
    terms.reverse();
    for (i, (k, c)) in terms.iter().enumerate() {
        if i > 0 {
            write!(f, " + ")?;
        }
        if *k == 0 {
            write!(f, "{c}")?;
        } else {
            write!(f, "{c}*x^{k}")?;
        }
    }
    Ok(())
}

impl fmt::Display for FpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_sparse(f, self, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_division_agree() {
        let p = 5;
        let a = FpPoly::from_coeffs(vec![1, 2, 3], p);
        let b = FpPoly::from_coeffs(vec![4, 1], p);
        let prod = a.mul(&b);
        let (q, r) = prod.div_rem(&b);
        assert_eq!(q, a);
        assert!(r.is_zero());
    }

    #[test]
    fn gcd_is_monic_common_factor() {
        let p = 7;
        let common = FpPoly::from_coeffs(vec![3, 1], p);
        let a = common.mul(&FpPoly::from_coeffs(vec![1, 0, 1], p));
        let b = common.mul(&FpPoly::from_coeffs(vec![2, 5], p)).scale(4);
        assert_eq!(a.gcd(&b), common);
    }

    #[test]
    fn inverse_mod_prime() {
        for p in [2u32, 3, 5, 7, 101, 2_147_483_647] {
            for a in [1u32, 2, p - 1] {
                if a % p == 0 {
                    continue;
                }
                assert_eq!(mul_mod(a, inv_mod(a, p), p), 1);
            }
        }
    }
}
