use crate::fields::{LogAbs, ValuedScalar};

use super::MeasuredGroup;

/// A base `beta` with `|beta| > 1` such that every generator has
/// `lambda = beta^e` for an integer `e`. Along a walk, `lambda(X_t)` is then
/// `lambda(X_0) * beta^K_t` for an integer level `K_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStructure {
    base: ValuedScalar,
    log_base: LogAbs,
    exponents: Vec<i64>,
}

impl LevelStructure {
    pub fn of(g: &MeasuredGroup) -> Option<Self> {
        let base = g
            .generators()
            .iter()
            .map(|s| s.element.lambda())
            .filter(|l| l.abs_value().to_f64() > 0.0)
            .min_by(|a, b| a.abs_value().to_f64().total_cmp(&b.abs_value().to_f64()))?
            .clone();
        let mut out = LevelStructure {
            log_base: base.abs_value(),
            base,
            exponents: Vec::new(),
        };
        out.exponents = g
            .generators()
            .iter()
            .map(|s| out.exponent_of(s.element.lambda()))
            .collect::<Option<_>>()?;
        Some(out)
    }

    pub fn base(&self) -> &ValuedScalar {
        &self.base
    }

    /// `log |beta|`, strictly positive.
    pub fn log_base(&self) -> LogAbs {
        self.log_base
    }

    /// Level change of each generator, in generator order.
    pub fn exponents(&self) -> &[i64] {
        &self.exponents
    }

    /// The integer `e` with `lambda = beta^e`, if there is one.
    pub fn exponent_of(&self, lambda: &ValuedScalar) -> Option<i64> {
        let e = match (lambda.abs_value(), self.log_base) {
            (LogAbs::NegInfinity, _) => return None,
            (LogAbs::Exact { k, base }, LogAbs::Exact { k: kb, base: bb }) if base == bb => {
                if k % kb != 0 {
                    return None;
                }
                k / kb
            }
            (LogAbs::Exact { k: 0, .. }, _) => 0,
            (la, lb) => {
                let ratio = la.to_f64() / lb.to_f64();
                if !ratio.is_finite() || ratio.abs() > 1e15 {
                    return None;
                }
                ratio.round() as i64
            }
        };
        (self.base.pow(e).ok()? == *lambda).then_some(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{bs12, lamplighter, zline};

    #[test]
    fn builtin_levels() {
        let l = LevelStructure::of(&bs12()).unwrap();
        assert_eq!(l.exponents(), &[1, -1, 0, 0]);
        assert_eq!(l.log_base(), LogAbs::exact(1, 2));
        let l = LevelStructure::of(&lamplighter(3).unwrap()).unwrap();
        assert_eq!(l.exponents(), &[0, 0, 1, -1]);
        assert!(LevelStructure::of(&zline()).is_none());
    }

    #[test]
    fn exponent_requires_exact_power() {
        let l = LevelStructure::of(&bs12()).unwrap();
        let place = crate::fields::Place::Archimedean;
        assert_eq!(
            l.exponent_of(&ValuedScalar::from_ratio(1, 8, place)),
            Some(-3)
        );
        assert_eq!(l.exponent_of(&ValuedScalar::from_ratio(-8, 1, place)), None);
        assert_eq!(l.exponent_of(&ValuedScalar::from_ratio(3, 1, place)), None);
        assert_eq!(
            l.exponent_of(&ValuedScalar::from_ratio(1, 1, place)),
            Some(0)
        );
    }
}
