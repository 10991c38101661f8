//! Seeded, reproducibly parallel random walks on a measured group, stopped
//! by exit from an interval of heights, by hitting a set of heights, or by
//! returning to a finite-index subgroup.

mod checks;
mod ensemble;
mod kernel;
mod rng;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::fields::{LogAbs, Place};
use crate::groups::{AffineElement, CosetLabeling, GroupError, MeasuredGroup};

pub use checks::{
    censor_check, martingale_check, moment_bound_check, CensorCheck, MartingaleCheck, MomentRow,
    CENSOR_LIMIT,
};
pub use ensemble::{
    fold_ensemble, fold_indexed, run_ensemble, EstimateReport, Statistic, CHUNK_SIZE,
    DEFAULT_CONFIDENCE,
};
pub use kernel::{sample_stopped_walk, walk_positions, PreparedWalk};
pub use rng::{domain_hash, substream_rng, trajectory_rng, BitSource, WeightedSampler};

/// Slack used when a height is compared to a real threshold in floating point.
pub const HEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),
    #[error("censored fraction {fraction:.3e} exceeds the limit {limit:.1e}")]
    TooManyCensored { fraction: f64, limit: f64 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// The real-valued projection a stopping rule looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Height {
    /// `rho(x) = -log |lambda(x)|`.
    Rho,
    /// `c(x)` itself; only for groups of rational translations, where rho is
    /// identically zero.
    Translation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_open: true,
            hi_open: true,
        }
    }

    /// `(lo, +inf)`.
    pub fn above(lo: f64) -> Self {
        Self::open(lo, f64::INFINITY)
    }

    /// `(-inf, hi)`.
    pub fn below(hi: f64) -> Self {
        Self::open(f64::NEG_INFINITY, hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        let above_lo = if self.lo_open {
            v > self.lo + HEIGHT_TOLERANCE
        } else {
            v >= self.lo - HEIGHT_TOLERANCE
        };
        let below_hi = if self.hi_open {
            v < self.hi - HEIGHT_TOLERANCE
        } else {
            v <= self.hi + HEIGHT_TOLERANCE
        };
        above_lo && below_hi
    }
}

#[derive(Debug, Clone)]
pub enum StopRule {
    /// First `t >= 0` with the height outside `[lo, hi]`.
    Exit { height: Height, lo: f64, hi: f64 },
    /// First `t >= 0` with the height in the union of `set`.
    Hit { height: Height, set: Vec<Interval> },
    /// First `t >= 1` with `X_t` in the subgroup labeled 0.
    Subgroup(Arc<CosetLabeling>),
}

impl StopRule {
    pub fn height(&self) -> Option<Height> {
        match self {
            StopRule::Exit { height, .. } | StopRule::Hit { height, .. } => Some(*height),
            StopRule::Subgroup(_) => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            StopRule::Exit { height, lo, hi } => format!("exit {height:?} [{lo}, {hi}]"),
            StopRule::Hit { height, set } => format!("hit {height:?} {set:?}"),
            StopRule::Subgroup(l) => format!("return to subgroup {}", l.kind()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    SigmaR,
    TauSet,
    TauSubgroup,
    Censored,
}

/// Which side of the interval an exit happened on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitSide {
    /// Height below `lo`.
    Low,
    /// Height above `hi`.
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    /// Fastest available kernel. Has the same law as `Exact` but may read
    /// the random stream differently.
    Auto,
    /// Integer level bookkeeping when the group allows it, else exact; reads
    /// the random stream exactly as `Exact` does.
    Levels,
    /// One exact group multiplication per step.
    Exact,
}

#[derive(Debug, Clone)]
pub struct WalkConfig {
    pub group: Arc<MeasuredGroup>,
    pub start: AffineElement,
    pub seed: u64,
    pub max_steps: u64,
    pub stop: StopRule,
    /// Record the distinct heights visited strictly before the stopping time.
    pub track_visits: bool,
    pub kernel: KernelChoice,
    /// Stream domain; trajectories of configs with equal `(seed, domain)`
    /// share their random bits.
    pub domain: u64,
}

/// `200 r^2`, the default step cap for exit-time runs.
pub fn default_max_steps(r: f64) -> u64 {
    (200.0 * r * r).ceil().max(1.0) as u64
}

impl WalkConfig {
    pub fn new(group: Arc<MeasuredGroup>, start: AffineElement, stop: StopRule, seed: u64) -> Self {
        let domain = Self::default_domain(&group, &start);
        WalkConfig {
            group,
            start,
            seed,
            max_steps: 1_000_000,
            stop,
            track_visits: false,
            kernel: KernelChoice::Auto,
            domain,
        }
    }

    /// `sigma_r`: exit of rho from `[-r, r]`, with the default step cap.
    pub fn sigma_r(group: Arc<MeasuredGroup>, start: AffineElement, r: f64, seed: u64) -> Self {
        let height = if group.level_structure().is_none() && group.is_virtually_abelian() {
            Height::Translation
        } else {
            Height::Rho
        };
        let mut cfg = Self::new(
            group,
            start,
            StopRule::Exit {
                height,
                lo: -r,
                hi: r,
            },
            seed,
        );
        cfg.max_steps = default_max_steps(r);
        cfg
    }

    /// Domain derived from the group and the start point, so distinct start
    /// points draw from disjoint streams while the stopping rule (and hence
    /// `r` or a threshold) does not change the trajectory.
    pub fn default_domain(group: &MeasuredGroup, start: &AffineElement) -> u64 {
        domain_hash(format!("{}|{}", group.name(), start).as_bytes())
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_visits(mut self) -> Self {
        self.track_visits = true;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelChoice) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        let bad = |m: String| Err(WalkError::InvalidConfig(m));
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if self.start.place() != self.group.place() {
            return bad(format!(
                "start {} is not over {}",
                self.start,
                self.group.place()
            ));
        }
        match &self.stop {
            StopRule::Exit { lo, hi, .. } if !(lo <= hi) => {
                return bad(format!("empty interval [{lo}, {hi}]"));
            }
            StopRule::Subgroup(l) if !l.is_irreducible() => {
                return bad(format!("labeling {} is not irreducible", l.kind()));
            }
            _ => {}
        }
        if self.stop.height() == Some(Height::Translation) {
            let translations = !matches!(self.group.place(), Place::LaurentInfinity(_))
                && self.start.c().as_rational().is_some()
                && self
                    .group
                    .generators()
                    .iter()
                    .all(|s| s.element.lambda().is_one());
            if !translations || !self.start.lambda().is_one() {
                return bad("translation height needs a group of rational translations".into());
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        self.stop.describe()
    }
}

/// One stopped trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppedSample {
    pub stop_kind: StopKind,
    pub stop_time: u64,
    pub final_element: AffineElement,
    /// Set for interval-exit rules.
    pub exit_side: Option<ExitSide>,
    /// Distinct heights at times `t < stop_time`, ascending; only when
    /// visit tracking is on.
    pub visited: Option<Vec<f64>>,
}

impl StoppedSample {
    pub fn final_rho(&self) -> LogAbs {
        self.final_element.rho()
    }

    pub fn final_c_abs(&self) -> LogAbs {
        self.final_element.c_abs()
    }

    pub fn is_censored(&self) -> bool {
        self.stop_kind == StopKind::Censored
    }
}
