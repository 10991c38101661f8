//! Walks on the line with i.i.d. symmetric integer steps: Monte Carlo checks
//! of exit-time, big-jump, exit-side, occupation and separated-set
//! estimates, with exact rational oracles where the chain is small.

mod lemmas;
pub mod oracle;
mod separated;
mod steps;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::walk::{domain_hash, trajectory_rng, BitSource, WalkError};

pub use lemmas::{
    verify_big_jump, verify_exit_time, verify_green_function, verify_msep, verify_occupation_time,
};
pub use separated::{max_separated, max_separated_brute_force};
pub use steps::StepDistribution;

#[derive(Debug, Error)]
pub enum LineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("censored fraction {fraction:.3e} at r = {r} exceeds the limit {limit:.1e}")]
    TooManyCensored { r: f64, fraction: f64, limit: f64 },
    #[error("only {count} samples satisfy the conditioning event (need {needed})")]
    RareConditioning { count: u64, needed: u64 },
    #[error(transparent)]
    Walk(#[from] WalkError),
}

/// Parameters shared by the line lemmas. Each check reads the fields it
/// needs; the sweeps default per lemma when left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineLemmaConfig {
    pub distribution: StepDistribution,
    pub r: f64,
    /// Start point `Y_0`.
    pub y: f64,
    /// Occupation window `[0, m]`.
    pub m: f64,
    /// Separated-set threshold: values in `(-inf, -q)` count.
    pub q: f64,
    /// Largest separated-set size of interest.
    pub n: u64,
    /// Occupation level reported as `Pr[V_m > v m^2]`.
    pub v: f64,
    /// Jump size reported as `Pr[some |Z_t| > z before exit]`.
    pub z: f64,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    pub r_values: Vec<f64>,
    pub m_values: Vec<f64>,
    pub z_values: Vec<f64>,
}

pub const DEFAULT_SEED: u64 = 0x5eed;

impl LineLemmaConfig {
    pub fn new(distribution: StepDistribution) -> Self {
        LineLemmaConfig {
            distribution,
            r: 16.0,
            y: 0.0,
            m: 2.0,
            q: 1.0,
            n: 2,
            v: 2.0,
            z: 4.0,
            n_samples: 100_000,
            seed: DEFAULT_SEED,
            workers: 1,
            r_values: Vec::new(),
            m_values: Vec::new(),
            z_values: Vec::new(),
        }
    }

    fn r_sweep(&self, default: &[f64]) -> Vec<f64> {
        if self.r_values.is_empty() {
            default.to_vec()
        } else {
            self.r_values.clone()
        }
    }

    fn check_common(&self) -> Result<(), LineError> {
        if self.n_samples == 0 {
            return Err(LineError::InvalidConfig(
                "n_samples must be positive".into(),
            ));
        }
        if !self.y.is_finite() {
            return Err(LineError::InvalidConfig("start must be finite".into()));
        }
        Ok(())
    }

    /// Stream domain: the distribution and the start, but not `r`, `m` or
    /// thresholds, so sweeps reuse the same paths.
    fn domain(&self, lemma: LemmaId) -> u64 {
        domain_hash(format!("line|{lemma:?}|{}|{}", self.distribution, self.y).as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    ExitTime,
    BigJump,
    GreenFunction,
    OccupationTime,
    Msep,
}

/// One estimated quantity, with the parameters it was taken at.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub quantity: String,
    pub at: BTreeMap<String, f64>,
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    /// Exact value from the absorbing-chain oracle, as `num/den`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRecord {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// A pass/fail condition with the number it was decided on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance region for `value`.
    pub accept: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaVerdict {
    pub lemma: LemmaId,
    pub config: LineLemmaConfig,
    pub values: Vec<Measurement>,
    pub fits: Vec<FitRecord>,
    pub checks: Vec<Check>,
    /// All checks pass.
    pub pass: bool,
    pub notes: Vec<String>,
}

impl LemmaVerdict {
    fn new(lemma: LemmaId, config: &LineLemmaConfig) -> Self {
        LemmaVerdict {
            lemma,
            config: config.clone(),
            values: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            pass: true,
            notes: Vec::new(),
        }
    }

    fn check(
        &mut self,
        name: impl Into<String>,
        value: f64,
        accept: impl Into<String>,
        pass: bool,
    ) {
        self.pass &= pass;
        self.checks.push(Check {
            name: name.into(),
            value,
            accept: accept.into(),
            pass,
        });
    }

    fn fit(&mut self, name: impl Into<String>, fit: &crate::stats::LinearFit) {
        self.fits.push(FitRecord {
            name: name.into(),
            slope: fit.slope,
            intercept: fit.intercept,
            r2: fit.r2,
            points: fit.n,
        });
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Where a line walk stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LineExit {
    Below,
    Above,
    Censored,
    /// `visit` asked to stop.
    Stopped,
}

/// Runs one walk from `y` until it leaves `[lo, hi]` or `cap` steps pass.
/// `visit(offset)` sees `Y_t - y` for every `t` before the exit and returns
/// `false` to stop early; `jump(z)` sees every step up to and including the
/// exiting one.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_line(
    dist: &steps::StepSampler,
    seed: u64,
    domain: u64,
    index: u64,
    y: f64,
    (lo, hi): (f64, f64),
    cap: u64,
    mut visit: impl FnMut(i64) -> bool,
    mut jump: impl FnMut(i64),
) -> (u64, LineExit) {
    let mut src = BitSource::new(trajectory_rng(seed, domain, index));
    let (mut s, mut t) = (0i64, 0u64);
    loop {
        let pos = y + s as f64;
        if pos < lo {
            return (t, LineExit::Below);
        }
        if pos > hi {
            return (t, LineExit::Above);
        }
        if t == cap {
            return (t, LineExit::Censored);
        }
        if !visit(s) {
            return (t, LineExit::Stopped);
        }
        let z = dist.sample(&mut src);
        jump(z);
        s += z;
        t += 1;
    }
}
