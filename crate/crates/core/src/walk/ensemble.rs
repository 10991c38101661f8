use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::stats::{z_for_confidence, Moments};

use super::kernel::PreparedWalk;
use super::{ExitSide, StopKind, StoppedSample, WalkConfig, WalkError};

/// Trajectories per work unit. Partial results are merged in chunk order, so
/// results do not depend on how chunks are spread over threads.
pub const CHUNK_SIZE: u64 = 1024;

/// Runs `step` for every index in `0..n`, chunked, and merges the per-chunk
/// accumulators in index order.
pub fn fold_indexed<A, I, F, M>(
    n: u64,
    workers: usize,
    init: I,
    step: F,
    merge: M,
) -> Result<A, WalkError>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64) + Sync,
    M: Fn(&mut A, A),
{
    let chunks = n.div_ceil(CHUNK_SIZE);
    let run_chunk = |c: u64| {
        let mut acc = init();
        for i in c * CHUNK_SIZE..((c + 1) * CHUNK_SIZE).min(n) {
            step(&mut acc, i);
        }
        acc
    };
    let parts: Vec<A> = if workers <= 1 || chunks <= 1 {
        (0..chunks).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| WalkError::ThreadPool(e.to_string()))?;
        pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect())
    };
    let mut acc = init();
    for p in parts {
        merge(&mut acc, p);
    }
    Ok(acc)
}

/// [`fold_indexed`] over the stopped trajectories of a prepared walk.
pub fn fold_ensemble<A, I, F, M>(
    walk: &PreparedWalk,
    n: u64,
    workers: usize,
    init: I,
    step: F,
    merge: M,
) -> Result<A, WalkError>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64, StoppedSample) + Sync,
    M: Fn(&mut A, A),
{
    fold_indexed(
        n,
        workers,
        init,
        |acc, i| step(acc, i, walk.sample(i)),
        merge,
    )
}

type StatFn = dyn Fn(&StoppedSample) -> Option<f64> + Send + Sync;

/// A named real functional of a stopped trajectory. `None` leaves the
/// trajectory out of the average (used for censored runs).
#[derive(Clone)]
pub struct Statistic {
    name: String,
    f: Arc<StatFn>,
}

impl fmt::Debug for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Statistic({})", self.name)
    }
}

impl Statistic {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&StoppedSample) -> Option<f64> + Send + Sync + 'static,
    ) -> Self {
        Statistic {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, s: &StoppedSample) -> Option<f64> {
        (self.f)(s)
    }

    /// Stopping time of non-censored runs.
    pub fn stop_time() -> Self {
        Self::new("stop_time", |s| {
            (!s.is_censored()).then_some(s.stop_time as f64)
        })
    }

    /// Indicator of a stop kind, over all runs including censored ones.
    pub fn stopped_by(kind: StopKind) -> Self {
        Self::new(format!("indicator_{kind:?}"), move |s| {
            Some((s.stop_kind == kind) as u8 as f64)
        })
    }

    /// Indicator of exiting above the interval, over non-censored runs.
    pub fn exit_high() -> Self {
        Self::new("exit_high", |s| {
            (!s.is_censored()).then_some((s.exit_side == Some(ExitSide::High)) as u8 as f64)
        })
    }

    /// Indicator of `|c(X_stop)| < threshold`, decided exactly.
    pub fn small_c(threshold: u64) -> Self {
        Self::new(format!("small_c_{threshold}"), move |s| {
            (!s.is_censored()).then_some(s.final_element.c().abs_lt_int(threshold) as u8 as f64)
        })
    }
}

/// Monte Carlo mean with its standard error and everything needed to
/// reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub statistic: String,
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    /// Samples where the statistic was defined.
    pub n_used: u64,
    pub n_censored: u64,
    pub confidence: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub domain: u64,
    /// Not serialized: reports must be byte-identical across worker counts.
    #[serde(skip)]
    pub worker_count: usize,
}

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

impl EstimateReport {
    pub fn from_moments(
        statistic: &str,
        m: &Moments,
        n_samples: u64,
        n_censored: u64,
        seed: u64,
        domain: u64,
        workers: usize,
    ) -> Self {
        let z = z_for_confidence(DEFAULT_CONFIDENCE);
        let se = m.std_error();
        EstimateReport {
            statistic: statistic.to_string(),
            estimate: m.mean,
            std_error: se,
            n_samples,
            n_used: m.n,
            n_censored,
            confidence: DEFAULT_CONFIDENCE,
            ci_low: m.mean - z * se,
            ci_high: m.mean + z * se,
            seed,
            domain,
            worker_count: workers,
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.n_samples == 0 {
            0.0
        } else {
            self.n_censored as f64 / self.n_samples as f64
        }
    }

    /// The same report with estimate and interval multiplied by `k > 0`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.estimate *= k;
        out.std_error *= k;
        out.ci_low *= k;
        out.ci_high *= k;
        out
    }
}

/// Mean of `stat` over trajectories `0..n` of `cfg`.
pub fn run_ensemble(
    cfg: &WalkConfig,
    n: u64,
    stat: &Statistic,
    workers: usize,
) -> Result<EstimateReport, WalkError> {
    if n == 0 {
        return Err(WalkError::InvalidConfig("need at least one sample".into()));
    }
    let walk = PreparedWalk::new(cfg)?;
    let (m, censored) = fold_ensemble(
        &walk,
        n,
        workers,
        || (Moments::default(), 0u64),
        |acc, _, s| {
            if s.is_censored() {
                acc.1 += 1;
            }
            if let Some(v) = stat.eval(&s) {
                acc.0.push(v);
            }
        },
        |acc, part| {
            acc.0.merge(&part.0);
            acc.1 += part.1;
        },
    )?;
    Ok(EstimateReport::from_moments(
        stat.name(),
        &m,
        n,
        censored,
        cfg.seed,
        cfg.domain,
        workers,
    ))
}
