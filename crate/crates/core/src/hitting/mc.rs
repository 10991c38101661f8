use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::groups::{
    AffineElement, Ball, CosetLabeling, GroupError, MeasuredGroup, DEFAULT_NODE_BUDGET,
};
use crate::stats::{tail_fit, Moments, TailFit};
use crate::walk::{fold_ensemble, EstimateReport, PreparedWalk};

use super::{
    check_labeling, return_walk, sort_support, HittingAtom, HittingError, HittingMeasure,
    HittingMode, Prob,
};

type Hit = Option<(u64, AffineElement)>;

/// Step cap for return walks; `tau_H` has an exponential tail.
pub const RETURN_MAX_STEPS: u64 = 1_000_000;
/// Largest number of support points listed by the Monte Carlo measure.
pub const DEFAULT_SUPPORT_LIMIT: usize = 1000;
/// Word lengths beyond this radius are recorded as "more than the cap".
pub const WORD_RADIUS_CAP: u32 = 16;
/// `E[tau_H]` must be within this many standard errors of the index.
pub const INDEX_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailSummary {
    pub slope: Option<f64>,
    pub r2: Option<f64>,
    pub finite_support: bool,
    pub decays: bool,
}

impl From<&TailFit> for TailSummary {
    fn from(t: &TailFit) -> Self {
        TailSummary {
            slope: t.slope(),
            r2: t.fit.map(|f| f.r2),
            finite_support: t.finite_support,
            decays: t.decays(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingTimeStats {
    pub group: String,
    pub labeling: String,
    pub index: usize,
    pub tau: EstimateReport,
    /// `|E[tau_H] - index| / std_error`; 0 when both agree exactly.
    pub z_score: f64,
    pub tail: TailSummary,
    /// `E[tau_H]` matches the index and the tail decays.
    pub pass: bool,
}

fn collect_samples(
    g: &Arc<MeasuredGroup>,
    labeling: &CosetLabeling,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<(Vec<Hit>, u64), HittingError> {
    check_labeling(labeling)?;
    if n == 0 {
        return Err(HittingError::InvalidConfig(
            "need at least one sample".into(),
        ));
    }
    let cfg = return_walk(g, labeling, seed, RETURN_MAX_STEPS);
    let walk = PreparedWalk::new(&cfg)?;
    let runs = fold_ensemble(
        &walk,
        n,
        workers,
        Vec::new,
        |acc, _, s| acc.push((!s.is_censored()).then_some((s.stop_time, s.final_element))),
        |acc, mut part| acc.append(&mut part),
    )?;
    Ok((runs, cfg.domain))
}

/// `E[tau_H]` with a log-survival fit of `tau_H`.
pub fn hitting_time_stats(
    g: &Arc<MeasuredGroup>,
    labeling: &CosetLabeling,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<HittingTimeStats, HittingError> {
    let (runs, domain) = collect_samples(g, labeling, n, seed, workers)?;
    let times: Vec<f64> = runs.iter().flatten().map(|(t, _)| *t as f64).collect();
    let censored = runs.len() as u64 - times.len() as u64;
    let m = Moments::from_slice(&times);
    let tau = EstimateReport::from_moments("tau_H", &m, n, censored, seed, domain, workers);
    let index = labeling.index() as f64;
    let z_score = if tau.std_error > 0.0 {
        (tau.estimate - index).abs() / tau.std_error
    } else if tau.estimate == index {
        0.0
    } else {
        f64::INFINITY
    };
    let tail = TailSummary::from(&tail_fit(&times));
    Ok(HittingTimeStats {
        group: g.name().to_string(),
        labeling: labeling.kind().to_string(),
        index: labeling.index(),
        pass: z_score <= INDEX_SIGMAS && tail.decays && censored == 0,
        tau,
        z_score,
        tail,
    })
}

/// Log-survival of the word length `|X_tau_H|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordLengthTail {
    /// Lengths were resolved exactly up to this radius.
    pub radius: u32,
    pub beyond_radius: u64,
    /// `(k, Pr[|X| > k])` for `k = 0..=radius`.
    pub survival: Vec<(u32, f64)>,
    pub fit: TailSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McHitting {
    pub measure: HittingMeasure,
    pub n_samples: u64,
    pub n_censored: u64,
    pub seed: u64,
    /// Every sampled return point has label 0.
    pub all_in_subgroup: bool,
    pub distinct_points: usize,
    pub word_length: WordLengthTail,
    /// The word-length tail decays.
    pub smooth: bool,
}

/// Empirical `mu_H` from `n` return walks, listing at most `support_limit`
/// points, with a smoothness check on the word length of the return point.
pub fn hitting_measure_mc(
    g: &Arc<MeasuredGroup>,
    labeling: &CosetLabeling,
    n: u64,
    seed: u64,
    workers: usize,
    support_limit: usize,
) -> Result<McHitting, HittingError> {
    let (runs, _) = collect_samples(g, labeling, n, seed, workers)?;
    let mut counts: HashMap<AffineElement, u64> = HashMap::new();
    let mut censored = 0u64;
    for run in &runs {
        match run {
            Some((_, x)) => *counts.entry(x.clone()).or_default() += 1,
            None => censored += 1,
        }
    }
    let mut all_in_subgroup = true;
    for x in counts.keys() {
        all_in_subgroup &= labeling.label(x)? == 0;
    }
    let lengths = word_lengths(g, counts.keys())?;
    let radius = lengths.1;
    let mut values = Vec::with_capacity(runs.len());
    let mut beyond = 0u64;
    for (x, &c) in &counts {
        let len = match lengths.0.get(x) {
            Some(&d) => d,
            None => {
                beyond += c;
                radius + 1
            }
        };
        values.extend(std::iter::repeat_n(len as f64, c as usize));
    }
    values.sort_by(f64::total_cmp);
    let done = values.len() as f64;
    let survival = (0..=radius)
        .map(|k| {
            (
                k,
                values.iter().filter(|&&v| v > k as f64).count() as f64 / done,
            )
        })
        .collect();
    let fit = TailSummary::from(&tail_fit(&values));

    let mut support: Vec<HittingAtom> = counts
        .iter()
        .map(|(x, &c)| {
            let p = c as f64 / n as f64;
            HittingAtom {
                element: x.clone(),
                p: Prob::Float(p),
                std_error: Some((p * (1.0 - p) / n as f64).sqrt()),
            }
        })
        .collect();
    sort_support(&mut support);
    let distinct_points = support.len();
    support.truncate(support_limit);
    let listed: u64 = support.iter().map(|a| counts[&a.element]).sum();
    let measure = HittingMeasure {
        mode: HittingMode::MonteCarlo,
        group: g.name().to_string(),
        labeling: labeling.kind().to_string(),
        support,
        residual: Prob::Float((n - listed) as f64 / n as f64),
    };
    Ok(McHitting {
        measure,
        n_samples: n,
        n_censored: censored,
        seed,
        all_in_subgroup,
        distinct_points,
        smooth: fit.decays,
        word_length: WordLengthTail {
            radius,
            beyond_radius: beyond,
            survival,
            fit,
        },
    })
}

/// Word lengths of the given elements, by growing a ball until all are
/// found, the radius reaches [`WORD_RADIUS_CAP`], or the node budget runs
/// out. Returns the lengths found and the radius reached.
fn word_lengths<'a>(
    g: &MeasuredGroup,
    points: impl Iterator<Item = &'a AffineElement>,
) -> Result<(HashMap<AffineElement, u32>, u32), HittingError> {
    let mut pending: Vec<&AffineElement> = points.collect();
    let mut found = HashMap::new();
    let mut ball = Ball::build(g, 0, DEFAULT_NODE_BUDGET)?;
    loop {
        pending.retain(|x| match ball.distance(x) {
            Some(d) => {
                found.insert((*x).clone(), d);
                false
            }
            None => true,
        });
        if pending.is_empty() || ball.radius() >= WORD_RADIUS_CAP {
            return Ok((found, ball.radius()));
        }
        match ball.grow(g, DEFAULT_NODE_BUDGET) {
            Ok(()) => {}
            Err(GroupError::BudgetExceeded { .. }) => return Ok((found, ball.radius())),
            Err(e) => return Err(e.into()),
        }
    }
}
