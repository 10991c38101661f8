//! The harmonic functions `f_r(x) = r Pr_x[|c(X_sigma_r)| < 3] 1{r > 2|rho(x)|}`:
//! Monte Carlo evaluation with caching, harmonicity and growth diagnostics,
//! orbit independence, and extension from a finite-index subgroup.

mod checks;
mod extend;
mod oracle;
mod orbit;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;
use thiserror::Error;

use crate::groups::{AffineElement, GroupError, MeasuredGroup};
use crate::hitting::HittingError;
use crate::walk::{
    fold_ensemble, PreparedWalk, WalkConfig, WalkError, CENSOR_LIMIT, HEIGHT_TOLERANCE,
};

pub use checks::{
    c_drift_check, conditional_small_c_check, growth_along_x, harmonicity_residual, q_min,
    seminorm_profile, small_c_decay, stabilization_report, ConditionalReport, ConditionalRow,
    DecayReport, DecayRow, GrowthReport, NeighborValue, ResidualReport, SeminormEstimate,
    SeminormProfile, StabilizationReport, DECAY_SLOPE_RANGE, DRIFT_GAP, MIN_BIN_COUNT, Q_MARGIN,
    RESIDUAL_SIGMAS,
};
pub use extend::{extend_harmonic, ExtensionEstimate, ExtensionOracle};
pub use oracle::{ConstantOracle, FHatOracle, FunctionOracle, OracleValue, RhoOracle};
pub use orbit::{orbit_independence, OrbitReport, RANK_TOLERANCE};

/// The threshold in `|c(X_sigma_r)| < 3`.
pub const DEFAULT_THRESHOLD: u64 = 3;

#[derive(Debug, Error)]
pub enum HarmonicError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Hitting(#[from] HittingError),
    #[error("{0} has no distinguished (0, lambda) element with |lambda| > 1; normalize the presentation first")]
    NotNormalized(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("censored fraction {fraction:.3e} at {point}, r = {r} exceeds the limit {limit:.1e}")]
    TooManyCensored {
        point: String,
        r: f64,
        fraction: f64,
        limit: f64,
    },
    #[error("no estimate for neighbor {neighbor}: {source}")]
    MissingNeighbor {
        neighbor: String,
        source: Box<HarmonicError>,
    },
    #[error("only {count} samples satisfy the conditioning event (need {needed})")]
    RareConditioning { count: u64, needed: u64 },
}

/// How `f_r` is estimated at each point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FSettings {
    pub r: f64,
    pub threshold: u64,
    pub n_samples: u64,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
}

impl FSettings {
    pub fn new(r: f64, n_samples: u64, seed: u64) -> Self {
        FSettings {
            r,
            threshold: DEFAULT_THRESHOLD,
            n_samples,
            seed,
            workers: 1,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_threshold(mut self, threshold: u64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn at_r(&self, r: f64) -> Self {
        FSettings { r, ..self.clone() }
    }
}

/// `f_r(x)` with its standard error and raw counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicEstimate {
    pub point: AffineElement,
    pub rho: f64,
    pub r: f64,
    pub threshold: u64,
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub n_censored: u64,
    /// Runs ending with `|c| < threshold`.
    pub n_small: u64,
    /// `r <= 2 |rho(x)|`: the value is 0 by definition and nothing is sampled.
    pub cutoff: bool,
    pub seed: u64,
    pub domain: u64,
}

fn require_normalized(g: &MeasuredGroup) -> Result<(), HarmonicError> {
    match g.x_element() {
        Some(x) if x.c().is_zero() && x.rho().to_f64() < 0.0 => Ok(()),
        _ => Err(HarmonicError::NotNormalized(g.name().to_string())),
    }
}

/// `f_r(x)` from `n` walks started at `x` and stopped at `sigma_r`. Walks from
/// distinct points use distinct stream domains, so estimates at distinct
/// points are independent.
pub fn estimate_f(
    g: &Arc<MeasuredGroup>,
    x: &AffineElement,
    s: &FSettings,
) -> Result<HarmonicEstimate, HarmonicError> {
    require_normalized(g)?;
    if s.threshold == 0 {
        return Err(HarmonicError::InvalidConfig(
            "threshold must be positive".into(),
        ));
    }
    if !(s.r > 0.0) || s.n_samples == 0 {
        return Err(HarmonicError::InvalidConfig(
            "need r > 0 and at least one sample".into(),
        ));
    }
    let cfg = WalkConfig::sigma_r(g.clone(), x.clone(), s.r, s.seed);
    let rho = x.rho().to_f64();
    let mut est = HarmonicEstimate {
        point: x.clone(),
        rho,
        r: s.r,
        threshold: s.threshold,
        value: 0.0,
        std_error: 0.0,
        n_samples: 0,
        n_censored: 0,
        n_small: 0,
        cutoff: true,
        seed: s.seed,
        domain: cfg.domain,
    };
    if s.r <= 2.0 * rho.abs() + HEIGHT_TOLERANCE {
        return Ok(est);
    }
    let walk = PreparedWalk::new(&cfg)?;
    let threshold = s.threshold;
    let (small, censored) = fold_ensemble(
        &walk,
        s.n_samples,
        s.workers,
        || (0u64, 0u64),
        |acc, _, w| {
            if w.is_censored() {
                acc.1 += 1;
            } else if w.final_element.c().abs_lt_int(threshold) {
                acc.0 += 1;
            }
        },
        |acc, part| {
            acc.0 += part.0;
            acc.1 += part.1;
        },
    )?;
    let fraction = censored as f64 / s.n_samples as f64;
    if fraction > CENSOR_LIMIT {
        return Err(HarmonicError::TooManyCensored {
            point: x.to_string(),
            r: s.r,
            fraction,
            limit: CENSOR_LIMIT,
        });
    }
    let used = (s.n_samples - censored) as f64;
    let p = small as f64 / used;
    est.value = s.r * p;
    est.std_error = s.r * (p * (1.0 - p) / used).sqrt();
    est.n_samples = s.n_samples;
    est.n_censored = censored;
    est.n_small = small;
    est.cutoff = false;
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    group: String,
    point: AffineElement,
    r_bits: u64,
    threshold: u64,
    seed: u64,
    n_samples: u64,
}

/// Estimates keyed by `(group, point, r, threshold, seed, n)`, shared by
/// every check that evaluates `f_r`.
#[derive(Debug, Default)]
pub struct EstimateCache {
    map: RwLock<HashMap<CacheKey, HarmonicEstimate>>,
}

impl EstimateCache {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn get_or_estimate(
        &self,
        g: &Arc<MeasuredGroup>,
        x: &AffineElement,
        s: &FSettings,
    ) -> Result<HarmonicEstimate, HarmonicError> {
        let key = CacheKey {
            group: g.name().to_string(),
            point: x.clone(),
            r_bits: s.r.to_bits(),
            threshold: s.threshold,
            seed: s.seed,
            n_samples: s.n_samples,
        };
        if let Some(hit) = self.map.read().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let est = estimate_f(g, x, s)?;
        self.map
            .write()
            .expect("cache lock")
            .insert(key, est.clone());
        Ok(est)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{bs12, zline};

    fn a_pow(g: &MeasuredGroup, k: i64) -> AffineElement {
        g.x_element().unwrap().pow(k)
    }

    #[test]
    fn cutoff_region_is_zero_without_sampling() {
        let g = Arc::new(bs12());
        // rho(a^-10) = 10 log 2 > 6.9
        let e = estimate_f(&g, &a_pow(&g, -10), &FSettings::new(13.0, 1000, 1)).unwrap();
        assert!(e.cutoff && e.value == 0.0 && e.n_samples == 0);
        let e = estimate_f(&g, &a_pow(&g, -10), &FSettings::new(14.0, 1000, 1)).unwrap();
        assert!(!e.cutoff && e.value > 0.0);
    }

    #[test]
    fn needs_a_normalized_group() {
        let g = Arc::new(zline());
        let e = estimate_f(&g, &g.identity(), &FSettings::new(8.0, 10, 1));
        assert!(matches!(e, Err(HarmonicError::NotNormalized(_))));
    }

    #[test]
    fn larger_threshold_never_lowers_the_estimate() {
        let g = Arc::new(bs12());
        for k in [-3, 0, 2] {
            let x = a_pow(&g, k);
            let three = estimate_f(&g, &x, &FSettings::new(16.0, 4000, 7)).unwrap();
            let four =
                estimate_f(&g, &x, &FSettings::new(16.0, 4000, 7).with_threshold(4)).unwrap();
            assert!(four.n_small >= three.n_small);
            assert!(four.value >= three.value && three.value >= 0.0);
        }
    }

    #[test]
    fn cache_reuses_estimates() {
        let g = Arc::new(bs12());
        let cache = EstimateCache::new();
        let s = FSettings::new(8.0, 500, 2);
        let first = cache.get_or_estimate(&g, &g.identity(), &s).unwrap();
        let again = cache.get_or_estimate(&g, &g.identity(), &s).unwrap();
        assert_eq!(first, again);
        assert_eq!(cache.len(), 1);
        cache
            .get_or_estimate(&g, &g.identity(), &s.at_r(16.0))
            .unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn distinct_points_draw_distinct_streams() {
        let g = Arc::new(bs12());
        let s = FSettings::new(8.0, 10, 2);
        let a = estimate_f(&g, &g.identity(), &s).unwrap();
        let b = estimate_f(&g, &a_pow(&g, 1), &s).unwrap();
        assert_ne!(a.domain, b.domain);
    }
}
