use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;
use serde::Serialize;

use crate::groups::{AffineElement, Ball, MeasuredGroup};
use crate::line::max_separated;
use crate::stats::{linear_fit, loglog_fit, LinearFit};
use crate::walk::{
    default_max_steps, fold_ensemble, ExitSide, Height, PreparedWalk, StopRule, WalkConfig,
    CENSOR_LIMIT,
};

use super::oracle::{FunctionOracle, OracleValue};
use super::{require_normalized, EstimateCache, FSettings, HarmonicError, HarmonicEstimate};

/// A residual passes within this many propagated standard errors.
pub const RESIDUAL_SIGMAS: f64 = 3.0;
/// Accepted log-log slope for quantities that decay like `1/r`.
pub const DECAY_SLOPE_RANGE: (f64, f64) = (-1.5, -0.5);
/// The `2` in `|c(X_sigma_r) - c(x)| > 2`.
pub const DRIFT_GAP: u64 = 2;
/// Conditioning events and conditional bins need this many samples.
pub const MIN_BIN_COUNT: u64 = 200;
/// Default `q` is `q_min` plus this margin, so that `q > q_min` strictly.
pub const Q_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborValue {
    pub generator: String,
    pub mu: f64,
    pub point: AffineElement,
    pub value: OracleValue,
    pub std_error: f64,
}

/// `f(x) - sum_s mu(s) f(xs)` with its propagated standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub oracle: String,
    pub point: AffineElement,
    pub value: OracleValue,
    pub neighbors: Vec<NeighborValue>,
    pub residual: f64,
    /// Set when every value is exact in a common unit.
    pub exact_residual: Option<String>,
    pub std_error: f64,
    /// `|residual| / std_error`.
    pub sigmas: f64,
    pub pass: bool,
}

/// Exact values in a common unit: rationals, or rational multiples of one
/// `log(base)`.
fn common_unit(values: &[&OracleValue]) -> Option<Option<u64>> {
    let mut unit = None;
    for v in values {
        let (coef, base) = v.exact()?;
        if coef.is_zero() || base.is_none() && unit.is_none() {
            continue;
        }
        match (unit, base) {
            (None, b) => unit = Some(b),
            (Some(u), b) if u == b => {}
            _ => return None,
        }
    }
    Some(unit.flatten())
}

/// Harmonicity residual at `x`, with errors propagated from independent
/// estimates at `x` and at each neighbor `xs`.
pub fn harmonicity_residual(
    g: &MeasuredGroup,
    oracle: &dyn FunctionOracle,
    x: &AffineElement,
) -> Result<ResidualReport, HarmonicError> {
    let value = oracle.eval(x)?;
    let mut neighbors = Vec::with_capacity(g.generators().len());
    for (i, s) in g.generators().iter().enumerate() {
        let y = x.mul(&s.element)?;
        let v = oracle
            .eval(&y)
            .map_err(|e| HarmonicError::MissingNeighbor {
                neighbor: y.to_string(),
                source: Box::new(e),
            })?;
        neighbors.push(NeighborValue {
            generator: s.label.clone(),
            mu: g.probability(i),
            point: y,
            std_error: v.std_error(),
            value: v,
        });
    }
    let all: Vec<&OracleValue> = std::iter::once(&value)
        .chain(neighbors.iter().map(|n| &n.value))
        .collect();
    let (residual, exact_residual, std_error) = match common_unit(&all) {
        Some(unit) => {
            let mut acc = value.exact().expect("exact").0.clone();
            for (i, n) in neighbors.iter().enumerate() {
                acc -= g.probability_exact(i) * n.value.exact().expect("exact").0;
            }
            let r = OracleValue::Exact {
                coef: acc,
                log_base: unit,
            };
            (r.value(), Some(r.describe()), 0.0)
        }
        None => {
            let mean: f64 = neighbors.iter().map(|n| n.mu * n.value.value()).sum();
            let var: f64 = value.std_error().powi(2)
                + neighbors
                    .iter()
                    .map(|n| (n.mu * n.std_error).powi(2))
                    .sum::<f64>();
            (value.value() - mean, None, var.sqrt())
        }
    };
    let (sigmas, pass) = if std_error > 0.0 {
        let z = residual.abs() / std_error;
        (z, z <= RESIDUAL_SIGMAS)
    } else {
        let ok = residual == 0.0;
        (if ok { 0.0 } else { f64::INFINITY }, ok)
    };
    Ok(ResidualReport {
        oracle: oracle.label(),
        point: x.clone(),
        value,
        neighbors,
        residual,
        exact_residual,
        std_error,
        sigmas,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeminormEstimate {
    pub k: u32,
    pub radius: u32,
    pub ball_size: usize,
    /// `max |f|` over the ball.
    pub max_abs: f64,
    pub argmax: AffineElement,
    pub argmax_std_error: f64,
    /// `max |f| / radius^k`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeminormProfile {
    pub oracle: String,
    pub rows: Vec<SeminormEstimate>,
    /// Largest over smallest ratio across radii.
    pub band: f64,
    /// Ratios strictly increase with the radius.
    pub increasing: bool,
}

impl SeminormProfile {
    pub fn within_band(&self, factor: f64) -> bool {
        self.band <= factor
    }
}

/// `max_{|x| <= R} |f(x)| / R^k` for each radius `R`, over BFS balls.
pub fn seminorm_profile(
    g: &MeasuredGroup,
    oracle: &dyn FunctionOracle,
    k: u32,
    radii: &[u32],
    budget: usize,
) -> Result<SeminormProfile, HarmonicError> {
    let mut radii = radii.to_vec();
    radii.sort_unstable();
    radii.dedup();
    if radii.first().is_none_or(|&r| r == 0) {
        return Err(HarmonicError::InvalidConfig(
            "radii must be positive".into(),
        ));
    }
    let ball = Ball::build(g, *radii.last().expect("nonempty"), budget)?;
    let mut rows = Vec::new();
    let mut best: Option<(f64, f64, AffineElement)> = None;
    let mut done = 0u32;
    for &radius in &radii {
        for d in done..=radius {
            if d == 0 && done > 0 {
                continue;
            }
            for x in ball.sphere(d) {
                let v = oracle.eval(x)?;
                if best.as_ref().is_none_or(|b| v.value().abs() > b.0) {
                    best = Some((v.value().abs(), v.std_error(), x.clone()));
                }
            }
        }
        done = radius + 1;
        let (max_abs, se, argmax) = best.clone().expect("the ball contains the identity");
        rows.push(SeminormEstimate {
            k,
            radius,
            ball_size: ball.sphere_sizes()[..=radius as usize].iter().sum(),
            max_abs,
            argmax,
            argmax_std_error: se,
            ratio: max_abs / (radius as f64).powi(k as i32),
        });
    }
    let max = rows
        .iter()
        .map(|r| r.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(SeminormProfile {
        oracle: oracle.label(),
        band: if min > 0.0 { max / min } else { f64::INFINITY },
        increasing: rows.windows(2).all(|w| w[1].ratio > w[0].ratio),
        rows,
    })
}

/// `f_r(x^{-n})` for `n = 1..=n_max`, where `x` is the distinguished
/// expanding element, so `rho(x^{-n}) = n log|lambda|` grows linearly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub estimates: Vec<HarmonicEstimate>,
    pub increasing: bool,
    pub fit: Option<LinearFit>,
    pub pass: bool,
}

pub const GROWTH_R2: f64 = 0.9;

pub fn growth_along_x(
    g: &Arc<MeasuredGroup>,
    n_max: u32,
    s: &FSettings,
    cache: &EstimateCache,
) -> Result<GrowthReport, HarmonicError> {
    require_normalized(g)?;
    let x = g.x_element().expect("normalized");
    let estimates = (1..=n_max as i64)
        .map(|n| cache.get_or_estimate(g, &x.pow(-n), s))
        .collect::<Result<Vec<_>, _>>()?;
    let ns: Vec<f64> = (1..=n_max).map(f64::from).collect();
    let vs: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let fit = linear_fit(&ns, &vs);
    let increasing = vs.windows(2).all(|w| w[1] > w[0]);
    Ok(GrowthReport {
        pass: increasing && fit.is_some_and(|f| f.slope > 0.0 && f.r2 > GROWTH_R2),
        estimates,
        increasing,
        fit,
    })
}

/// `f_r(x)` along a sweep of `r`, with a check that successive values agree
/// within 3 standard errors. Diagnostic only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationReport {
    pub estimates: Vec<HarmonicEstimate>,
    /// `|f_{r_{i+1}} - f_{r_i}| / sqrt(se_i^2 + se_{i+1}^2)`.
    pub successive_sigmas: Vec<f64>,
    pub stable: bool,
}

pub fn stabilization_report(
    g: &Arc<MeasuredGroup>,
    x: &AffineElement,
    r_values: &[f64],
    s: &FSettings,
    cache: &EstimateCache,
) -> Result<StabilizationReport, HarmonicError> {
    let estimates = r_values
        .iter()
        .map(|&r| cache.get_or_estimate(g, x, &s.at_r(r)))
        .collect::<Result<Vec<_>, _>>()?;
    let successive_sigmas: Vec<f64> = estimates
        .windows(2)
        .map(|w| {
            let se = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
            let d = (w[1].value - w[0].value).abs();
            if se > 0.0 {
                d / se
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(StabilizationReport {
        stable: successive_sigmas.iter().all(|&z| z <= 3.0),
        estimates,
        successive_sigmas,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub r: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub n_censored: u64,
    pub events: u64,
    /// Runs in the conditioning event, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<u64>,
}

/// A probability along a sweep of `r`, expected to decay like `1/r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub quantity: String,
    pub point: AffineElement,
    pub seed: u64,
    pub rows: Vec<DecayRow>,
    pub fit: Option<LinearFit>,
    pub pass: bool,
}

fn decay_report(
    quantity: String,
    x: &AffineElement,
    seed: u64,
    rows: Vec<DecayRow>,
) -> DecayReport {
    let rs: Vec<f64> = rows.iter().map(|r| r.r).collect();
    let ps: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    let fit = loglog_fit(&rs, &ps).filter(|f| f.n == rows.len() && f.n >= 2);
    let (lo, hi) = DECAY_SLOPE_RANGE;
    DecayReport {
        quantity,
        point: x.clone(),
        seed,
        pass: fit.is_some_and(|f| (lo..=hi).contains(&f.slope)),
        fit,
        rows,
    }
}

fn censor_guard(x: &AffineElement, r: f64, censored: u64, n: u64) -> Result<(), HarmonicError> {
    let fraction = censored as f64 / n as f64;
    if fraction > CENSOR_LIMIT {
        return Err(HarmonicError::TooManyCensored {
            point: x.to_string(),
            r,
            fraction,
            limit: CENSOR_LIMIT,
        });
    }
    Ok(())
}

fn proportion(k: u64, n: u64) -> (f64, f64) {
    let p = k as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// `Pr_x[|c(X_sigma) - c(x)| > gap and rho exits [0, r] on the right]` for
/// each `r`; `None` for `gap` means an infinite gap (the empty event).
#[allow(clippy::too_many_arguments)]
pub fn c_drift_check(
    g: &Arc<MeasuredGroup>,
    x: &AffineElement,
    r_values: &[f64],
    gap: Option<u64>,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<DecayReport, HarmonicError> {
    require_normalized(g)?;
    let rho = x.rho().to_f64();
    if !(rho > 0.0) || r_values.iter().any(|&r| !(rho < r)) {
        return Err(HarmonicError::InvalidConfig(format!(
            "need 0 < rho(x) < r, got rho = {rho}"
        )));
    }
    if n == 0 {
        return Err(HarmonicError::InvalidConfig(
            "need at least one sample".into(),
        ));
    }
    let c0 = x.c().clone();
    let mut rows = Vec::new();
    for &r in r_values {
        let stop = StopRule::Exit {
            height: Height::Rho,
            lo: 0.0,
            hi: r,
        };
        let cfg =
            WalkConfig::new(g.clone(), x.clone(), stop, seed).with_max_steps(default_max_steps(r));
        let walk = PreparedWalk::new(&cfg)?;
        let (events, right, censored) = fold_ensemble(
            &walk,
            n,
            workers,
            || (0u64, 0u64, 0u64),
            |acc, _, w| {
                if w.is_censored() {
                    acc.2 += 1;
                } else if w.exit_side == Some(ExitSide::High) {
                    acc.1 += 1;
                    let far = gap.is_some_and(|t| {
                        let d = w.final_element.c().sub(&c0).expect("same place");
                        d.abs_cmp_int(t) == std::cmp::Ordering::Greater
                    });
                    acc.0 += far as u64;
                }
            },
            |acc, p| {
                acc.0 += p.0;
                acc.1 += p.1;
                acc.2 += p.2;
            },
        )?;
        censor_guard(x, r, censored, n)?;
        if right < MIN_BIN_COUNT {
            return Err(HarmonicError::RareConditioning {
                count: right,
                needed: MIN_BIN_COUNT,
            });
        }
        let (p, se) = proportion(events, n - censored);
        rows.push(DecayRow {
            r,
            estimate: p,
            std_error: se,
            n_samples: n,
            n_censored: censored,
            events,
            conditioning: Some(right),
        });
    }
    let label = gap.map_or("inf".to_string(), |t| t.to_string());
    Ok(decay_report(
        format!("Pr[|c(X_sigma) - c(x)| > {label}, exit right of [0, r]]"),
        x,
        seed,
        rows,
    ))
}

/// `Pr_x[|c(X_sigma_r)| < threshold]` for each `r` (not scaled by `r`).
pub fn small_c_decay(
    g: &Arc<MeasuredGroup>,
    x: &AffineElement,
    r_values: &[f64],
    s: &FSettings,
    cache: &EstimateCache,
) -> Result<DecayReport, HarmonicError> {
    let mut rows = Vec::new();
    for &r in r_values {
        let e = cache.get_or_estimate(g, x, &s.at_r(r))?;
        if e.cutoff {
            return Err(HarmonicError::InvalidConfig(format!(
                "r = {r} is inside the cutoff 2|rho(x)|"
            )));
        }
        rows.push(DecayRow {
            r,
            estimate: e.value / r,
            std_error: e.std_error / r,
            n_samples: e.n_samples,
            n_censored: e.n_censored,
            events: e.n_small,
            conditioning: None,
        });
    }
    Ok(decay_report(
        format!("Pr[|c(X_sigma_r)| < {}]", s.threshold),
        x,
        s.seed,
        rows,
    ))
}

/// Smallest admissible `q` for the separated-set conditioning:
/// `log(3 / (|c(z)| (1 - sum_{k >= 1} e^-k)))`.
pub fn q_min(g: &MeasuredGroup) -> Result<f64, HarmonicError> {
    let z = g
        .z_element()
        .ok_or_else(|| HarmonicError::InvalidConfig(format!("{} has no z-element", g.name())))?;
    let c = z.c().abs_value().to_f64().exp();
    let tail = 1.0 / (std::f64::consts::E - 1.0);
    Ok((3.0 / (c * (1.0 - tail))).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalRow {
    /// Separated-set size `MS_r((-inf, -q))`.
    pub ms: u64,
    pub count: u64,
    pub small: u64,
    pub probability: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalReport {
    pub point: AffineElement,
    pub r: f64,
    pub q: f64,
    pub q_min: f64,
    pub threshold: u64,
    pub n_samples: u64,
    pub n_censored: u64,
    pub seed: u64,
    pub rows: Vec<ConditionalRow>,
    /// Bins with fewer than [`MIN_BIN_COUNT`] samples.
    pub dropped: Vec<ConditionalRow>,
    /// `ln Pr[small c | MS = n]` against `n`, over kept bins with a positive
    /// probability.
    pub fit: Option<LinearFit>,
    pub pass: bool,
}

/// `Pr_x[|c(X_sigma_r)| < threshold | MS_r((-inf, -q)) = n]` binned by `n`.
pub fn conditional_small_c_check(
    g: &Arc<MeasuredGroup>,
    x: &AffineElement,
    q: Option<f64>,
    s: &FSettings,
) -> Result<ConditionalReport, HarmonicError> {
    require_normalized(g)?;
    let q_min = q_min(g)?;
    let q = q.unwrap_or(q_min + Q_MARGIN);
    if !(q > q_min) {
        return Err(HarmonicError::InvalidConfig(format!(
            "need q > q_min = {q_min}, got {q}"
        )));
    }
    let cfg = WalkConfig::sigma_r(g.clone(), x.clone(), s.r, s.seed).with_visits();
    let walk = PreparedWalk::new(&cfg)?;
    let threshold = s.threshold;
    let (bins, censored) = fold_ensemble(
        &walk,
        s.n_samples,
        s.workers,
        || (BTreeMap::<u64, (u64, u64)>::new(), 0u64),
        |acc, _, w| {
            if w.is_censored() {
                acc.1 += 1;
                return;
            }
            let below: Vec<f64> = w
                .visited
                .as_deref()
                .unwrap_or(&[])
                .iter()
                .copied()
                .filter(|&h| h < -q)
                .collect();
            let ms = max_separated(&below) as u64;
            let bin = acc.0.entry(ms).or_default();
            bin.0 += 1;
            bin.1 += w.final_element.c().abs_lt_int(threshold) as u64;
        },
        |acc, part| {
            for (k, (c, sm)) in part.0 {
                let bin = acc.0.entry(k).or_default();
                bin.0 += c;
                bin.1 += sm;
            }
            acc.1 += part.1;
        },
    )?;
    censor_guard(x, s.r, censored, s.n_samples)?;
    let (mut rows, mut dropped) = (Vec::new(), Vec::new());
    for (ms, (count, small)) in bins {
        let (p, se) = proportion(small, count);
        let row = ConditionalRow {
            ms,
            count,
            small,
            probability: p,
            std_error: se,
        };
        if count >= MIN_BIN_COUNT {
            rows.push(row);
        } else {
            dropped.push(row);
        }
    }
    let (ns, lp): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.small > 0)
        .map(|r| (r.ms as f64, r.probability.ln()))
        .unzip();
    let fit = linear_fit(&ns, &lp);
    Ok(ConditionalReport {
        point: x.clone(),
        r: s.r,
        q,
        q_min,
        threshold,
        n_samples: s.n_samples,
        n_censored: censored,
        seed: s.seed,
        rows,
        dropped,
        pass: fit.is_some_and(|f| f.slope < 0.0),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{bs12, lamplighter, DEFAULT_NODE_BUDGET};
    use crate::harmonic::{ConstantOracle, FHatOracle, RhoOracle};

    #[test]
    fn constants_and_rho_are_exactly_harmonic() {
        for g in [bs12(), lamplighter(2).unwrap(), lamplighter(3).unwrap()] {
            let ball = Ball::build(&g, 3, DEFAULT_NODE_BUDGET).unwrap();
            for x in ball.elements() {
                let c = harmonicity_residual(&g, &ConstantOracle::int(7), x).unwrap();
                assert_eq!(c.exact_residual.as_deref(), Some("0"));
                let r = harmonicity_residual(&g, &RhoOracle, x).unwrap();
                assert_eq!(r.exact_residual.as_deref(), Some("0"), "{x}");
                assert!(r.pass && r.residual == 0.0);
            }
        }
    }

    #[test]
    fn seminorm_of_simple_functions() {
        let g = bs12();
        let one = seminorm_profile(
            &g,
            &ConstantOracle::int(1),
            0,
            &[1, 2, 3],
            DEFAULT_NODE_BUDGET,
        )
        .unwrap();
        assert!(one.rows.iter().all(|r| r.ratio == 1.0));
        let rho = seminorm_profile(&g, &RhoOracle, 1, &[2, 4, 6], DEFAULT_NODE_BUDGET).unwrap();
        // |rho(x)| <= |x| max_s |rho(s)|, with equality along powers of a
        for r in &rho.rows {
            assert!((r.ratio - 2f64.ln()).abs() < 1e-12);
        }
        assert!(matches!(
            seminorm_profile(&g, &RhoOracle, 1, &[12], 100),
            Err(HarmonicError::Group(
                crate::groups::GroupError::BudgetExceeded { .. }
            ))
        ));
    }

    #[test]
    fn f_hat_residual_at_small_r() {
        let g = Arc::new(bs12());
        let o = FHatOracle::new(g.clone(), FSettings::new(8.0, 40_000, 11));
        let rep = harmonicity_residual(&g, &o, &g.identity()).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.neighbors.len(), 4);
        assert!(rep.std_error > 0.0);
    }

    #[test]
    fn f_hat_profile_grows_with_the_ball() {
        let g = Arc::new(bs12());
        let o = FHatOracle::new(g.clone(), FSettings::new(16.0, 1_000, 3));
        let k0 = seminorm_profile(&g, &o, 0, &[1, 2, 3], DEFAULT_NODE_BUDGET).unwrap();
        assert!(k0.increasing, "{k0:?}");
        assert_eq!(o.cache.len(), 1 + 4 + 12 + 26);
    }

    #[test]
    fn drift_event_shrinks_with_r() {
        let g = Arc::new(bs12());
        let x = g.x_element().unwrap().pow(-3);
        let rep =
            c_drift_check(&g, &x, &[16.0, 32.0, 64.0], Some(DRIFT_GAP), 20_000, 4, 1).unwrap();
        let p: Vec<f64> = rep.rows.iter().map(|r| r.estimate).collect();
        assert!(p.windows(2).all(|w| w[1] < w[0]), "{p:?}");
        assert!(rep.pass, "{rep:?}");
        let none = c_drift_check(&g, &x, &[16.0], None, 2_000, 4, 1).unwrap();
        assert_eq!(none.rows[0].events, 0);
        assert!(matches!(
            c_drift_check(&g, &g.identity(), &[16.0], Some(2), 10, 4, 1),
            Err(HarmonicError::InvalidConfig(_))
        ));
    }

    #[test]
    fn q_min_for_unit_translation() {
        let e = std::f64::consts::E;
        assert!((q_min(&bs12()).unwrap() - (3.0 * (e - 1.0) / (e - 2.0)).ln()).abs() < 1e-12);
    }

    #[test]
    fn conditional_probability_falls_with_separated_count() {
        let g = Arc::new(bs12());
        let rep =
            conditional_small_c_check(&g, &g.identity(), None, &FSettings::new(32.0, 20_000, 5))
                .unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(
            rep.rows
                .iter()
                .chain(&rep.dropped)
                .map(|r| r.count)
                .sum::<u64>()
                == 20_000 - rep.n_censored
        );
        assert!(rep.dropped.iter().all(|r| r.count < MIN_BIN_COUNT));
        let low =
            conditional_small_c_check(&g, &g.identity(), Some(1.0), &FSettings::new(32.0, 10, 5));
        assert!(matches!(low, Err(HarmonicError::InvalidConfig(_))));
    }

    #[test]
    fn stabilization_reports_successive_gaps() {
        let g = Arc::new(bs12());
        let cache = EstimateCache::default();
        let rep = stabilization_report(
            &g,
            &g.identity(),
            &[8.0, 16.0],
            &FSettings::new(8.0, 2_000, 1),
            &cache,
        )
        .unwrap();
        assert_eq!(rep.estimates.len(), 2);
        assert_eq!(rep.successive_sigmas.len(), 1);
    }
}
