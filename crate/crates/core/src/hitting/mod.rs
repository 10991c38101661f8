//! First returns of the walk to a finite-index subgroup `H`: return times,
//! and the law `mu_H` of the position at the first return, exactly on small
//! chains and by Monte Carlo in general.

mod exact;
mod mc;

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::groups::{AffineElement, CosetLabeling, GroupError, MeasuredGroup};
use crate::walk::{StopRule, WalkConfig, WalkError};

pub use exact::{hitting_measure_exact, DEFAULT_STATE_BUDGET, LEAK_LIMIT};
pub use mc::{
    hitting_measure_mc, hitting_time_stats, HittingTimeStats, McHitting, WordLengthTail,
    DEFAULT_SUPPORT_LIMIT, WORD_RADIUS_CAP,
};

#[derive(Debug, Error)]
pub enum HittingError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("the chain on cosets of {0} is not irreducible")]
    Reducible(String),
    #[error("state budget {budget} exceeded: {leak:.3e} of the mass escapes the truncated chain (limit {limit:.0e})")]
    MassLeak {
        budget: usize,
        leak: f64,
        limit: f64,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// A probability, exact or estimated. Exact values serialize as `"num/den"`.
#[derive(Debug, Clone, PartialEq)]
pub enum Prob {
    Exact(BigRational),
    Float(f64),
}

impl Prob {
    pub fn to_f64(&self) -> f64 {
        match self {
            Prob::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Prob::Float(p) => *p,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Prob::Exact(q) => Some(q),
            Prob::Float(_) => None,
        }
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prob::Exact(q) => write!(f, "{q}"),
            Prob::Float(p) => write!(f, "{p}"),
        }
    }
}

impl Serialize for Prob {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Prob::Exact(q) => s.serialize_str(&q.to_string()),
            Prob::Float(p) => s.serialize_f64(*p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingAtom {
    pub element: AffineElement,
    pub p: Prob,
    /// Binomial standard error, Monte Carlo only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HittingMode {
    Exact,
    MonteCarlo,
}

/// `mu_H`, sorted by decreasing probability. `residual` is the mass not
/// listed: zero for exact measures; censored runs plus the truncated tail of
/// the support for Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingMeasure {
    pub mode: HittingMode,
    pub group: String,
    pub labeling: String,
    pub support: Vec<HittingAtom>,
    pub residual: Prob,
}

impl HittingMeasure {
    pub fn probability(&self, x: &AffineElement) -> Option<&Prob> {
        self.support.iter().find(|a| a.element == *x).map(|a| &a.p)
    }

    pub fn total_mass(&self) -> f64 {
        self.support.iter().map(|a| a.p.to_f64()).sum()
    }
}

fn check_labeling(labeling: &CosetLabeling) -> Result<(), HittingError> {
    if labeling.is_irreducible() {
        Ok(())
    } else {
        Err(HittingError::Reducible(labeling.kind().to_string()))
    }
}

/// Order for listing a support: decreasing probability, then by the
/// element's text so that ties are listed deterministically.
fn sort_support(atoms: &mut [HittingAtom]) {
    atoms.sort_by(|a, b| {
        b.p.to_f64()
            .total_cmp(&a.p.to_f64())
            .then_with(|| a.element.to_string().cmp(&b.element.to_string()))
    });
}

/// The walk from the identity stopped at its first return to `H`.
fn return_walk(
    g: &Arc<MeasuredGroup>,
    labeling: &CosetLabeling,
    seed: u64,
    max_steps: u64,
) -> WalkConfig {
    let stop = StopRule::Subgroup(Arc::new(labeling.clone()));
    let mut cfg = WalkConfig::new(g.clone(), g.identity(), stop, seed).with_max_steps(max_steps);
    cfg.domain =
        crate::walk::domain_hash(format!("hitting|{}|{}", g.name(), labeling.kind()).as_bytes());
    cfg
}
