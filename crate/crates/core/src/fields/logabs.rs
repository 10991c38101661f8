use std::fmt;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

/// `log |a|`, exact as `k * log(base)` when possible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LogAbs {
    /// `log |0|`.
    NegInfinity,
    /// `k * log(base)`. The zero value is normalized to `k = 0, base = 1`.
    Exact {
        k: i64,
        base: u64,
    },
    Float(f64),
}

impl LogAbs {
    pub const ZERO: LogAbs = LogAbs::Exact { k: 0, base: 1 };

    pub fn exact(k: i64, base: u64) -> Self {
        if k == 0 || base == 1 {
            LogAbs::ZERO
        } else {
            LogAbs::Exact { k, base }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            LogAbs::NegInfinity => f64::NEG_INFINITY,
            LogAbs::Exact { k, base } => k as f64 * (base as f64).ln(),
            LogAbs::Float(v) => v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, LogAbs::Exact { .. })
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            LogAbs::Exact { k, .. } => k == 0,
            LogAbs::Float(v) => v == 0.0,
            LogAbs::NegInfinity => false,
        }
    }

    /// Equality that is exact for exact values and within `tol` otherwise.
    pub fn approx_eq(&self, other: &LogAbs, tol: f64) -> bool {
        match (self, other) {
            (LogAbs::NegInfinity, LogAbs::NegInfinity) => true,
            (LogAbs::Exact { .. }, LogAbs::Exact { .. }) => self == other,
            _ => (self.to_f64() - other.to_f64()).abs() <= tol,
        }
    }
}

impl Add for LogAbs {
    type Output = LogAbs;

    fn add(self, rhs: LogAbs) -> LogAbs {
        match (self, rhs) {
            (LogAbs::NegInfinity, _) | (_, LogAbs::NegInfinity) => LogAbs::NegInfinity,
            (LogAbs::Exact { k: 0, .. }, other) | (other, LogAbs::Exact { k: 0, .. }) => other,
            (LogAbs::Exact { k: a, base: b1 }, LogAbs::Exact { k: b, base: b2 }) if b1 == b2 => {
                LogAbs::exact(a + b, b1)
            }
            (x, y) => LogAbs::Float(x.to_f64() + y.to_f64()),
        }
    }
}

impl Neg for LogAbs {
    type Output = LogAbs;

    /// Negation; `-log|0|` has no finite meaning and stays the sentinel.
    fn neg(self) -> LogAbs {
        match self {
            LogAbs::NegInfinity => LogAbs::NegInfinity,
            LogAbs::Exact { k, base } => LogAbs::exact(-k, base),
            LogAbs::Float(v) => LogAbs::Float(-v),
        }
    }
}

impl fmt::Display for LogAbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogAbs::NegInfinity => write!(f, "-inf"),
            LogAbs::Exact { k: 0, .. } => write!(f, "0"),
            LogAbs::Exact { k, base } => write!(f, "{k}*log({base})"),
            LogAbs::Float(v) => write!(f, "{v}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_addition_stays_exact() {
        let a = LogAbs::exact(3, 2);
        let b = LogAbs::exact(-5, 2);
        assert_eq!(a + b, LogAbs::exact(-2, 2));
        assert_eq!(a + (-a), LogAbs::ZERO);
        assert_eq!(a + LogAbs::ZERO, a);
    }

    #[test]
    fn mixed_bases_fall_back_to_float() {
        let s = LogAbs::exact(1, 2) + LogAbs::exact(1, 3);
        assert!(matches!(s, LogAbs::Float(_)));
        assert!((s.to_f64() - 6f64.ln()).abs() < 1e-12);
    }
}
