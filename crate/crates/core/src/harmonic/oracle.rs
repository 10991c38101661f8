use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::fields::LogAbs;
use crate::groups::{AffineElement, MeasuredGroup};

use super::{EstimateCache, FSettings, HarmonicError};

/// A function value: exactly `coef * log(base)` (or `coef` when `log_base`
/// is `None`), or a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleValue {
    Exact {
        coef: BigRational,
        log_base: Option<u64>,
    },
    Estimate {
        value: f64,
        std_error: f64,
    },
}

impl OracleValue {
    pub fn rational(q: BigRational) -> Self {
        OracleValue::Exact {
            coef: q,
            log_base: None,
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            OracleValue::Exact { coef, log_base } => {
                let c = coef.to_f64().unwrap_or(f64::NAN);
                match log_base {
                    Some(b) => c * (*b as f64).ln(),
                    None => c,
                }
            }
            OracleValue::Estimate { value, .. } => *value,
        }
    }

    pub fn std_error(&self) -> f64 {
        match self {
            OracleValue::Exact { .. } => 0.0,
            OracleValue::Estimate { std_error, .. } => *std_error,
        }
    }

    /// The exact value as `(coef, log_base)`, if exact.
    pub fn exact(&self) -> Option<(&BigRational, Option<u64>)> {
        match self {
            OracleValue::Exact { coef, log_base } => Some((coef, *log_base)),
            OracleValue::Estimate { .. } => None,
        }
    }

    /// Text form for reports: `num/den`, `num/den*log(b)` or a float.
    pub fn describe(&self) -> String {
        match self {
            OracleValue::Exact {
                coef,
                log_base: Some(b),
            } if !coef.is_zero() => format!("{coef}*log({b})"),
            OracleValue::Exact { coef, .. } => coef.to_string(),
            OracleValue::Estimate { value, .. } => format!("{value}"),
        }
    }
}

impl Serialize for OracleValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&self.describe())
    }
}

/// A real function on the group, evaluated pointwise.
pub trait FunctionOracle: Send + Sync {
    fn label(&self) -> String;
    fn eval(&self, x: &AffineElement) -> Result<OracleValue, HarmonicError>;
}

#[derive(Debug, Clone)]
pub struct ConstantOracle(pub BigRational);

impl ConstantOracle {
    pub fn int(v: i64) -> Self {
        ConstantOracle(BigRational::from_integer(BigInt::from(v)))
    }
}

impl FunctionOracle for ConstantOracle {
    fn label(&self) -> String {
        format!("constant {}", self.0)
    }

    fn eval(&self, _: &AffineElement) -> Result<OracleValue, HarmonicError> {
        Ok(OracleValue::rational(self.0.clone()))
    }
}

/// `rho(x) = -log |lambda(x)|`, exact whenever the absolute value is.
#[derive(Debug, Clone, Copy)]
pub struct RhoOracle;

impl FunctionOracle for RhoOracle {
    fn label(&self) -> String {
        "rho".into()
    }

    fn eval(&self, x: &AffineElement) -> Result<OracleValue, HarmonicError> {
        Ok(match x.rho() {
            LogAbs::Exact { k, base } if k == 0 || base == 1 => {
                OracleValue::rational(BigRational::zero())
            }
            LogAbs::Exact { k, base } => OracleValue::Exact {
                coef: BigRational::from_integer(BigInt::from(k)),
                log_base: Some(base),
            },
            other => OracleValue::Estimate {
                value: other.to_f64(),
                std_error: 0.0,
            },
        })
    }
}

/// `f_r` by Monte Carlo, through a shared cache.
#[derive(Debug, Clone)]
pub struct FHatOracle {
    pub group: Arc<MeasuredGroup>,
    pub settings: FSettings,
    pub cache: Arc<EstimateCache>,
}

impl FHatOracle {
    pub fn new(group: Arc<MeasuredGroup>, settings: FSettings) -> Self {
        FHatOracle {
            group,
            settings,
            cache: EstimateCache::new(),
        }
    }

    pub fn with_cache(mut self, cache: Arc<EstimateCache>) -> Self {
        self.cache = cache;
        self
    }
}

impl FunctionOracle for FHatOracle {
    fn label(&self) -> String {
        format!(
            "f_r, r = {}, threshold {}",
            self.settings.r, self.settings.threshold
        )
    }

    fn eval(&self, x: &AffineElement) -> Result<OracleValue, HarmonicError> {
        let e = self.cache.get_or_estimate(&self.group, x, &self.settings)?;
        if e.cutoff {
            return Ok(OracleValue::rational(BigRational::zero()));
        }
        Ok(OracleValue::Estimate {
            value: e.value,
            std_error: e.std_error,
        })
    }
}
