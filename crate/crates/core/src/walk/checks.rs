//! Sanity checks on the walk itself: moment growth of the word length,
//! the martingale property of rho, and how often exit-time runs hit the cap.

use std::sync::Arc;

use serde::Serialize;

use crate::groups::{AffineElement, Ball, MeasuredGroup, DEFAULT_NODE_BUDGET};
use crate::stats::Moments;

use super::ensemble::fold_indexed;
use super::kernel::walk_positions;
use super::{domain_hash, run_ensemble, Statistic, WalkConfig, WalkError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub t: u64,
    /// Empirical `E |X_t|^k`.
    pub moment: f64,
    pub std_error: f64,
    /// `E |X_t|^k / t^k`; `None` at `t = 0`.
    pub ratio: Option<f64>,
}

/// Empirical `E |X_t|^k / t^k` for each `t`. Word lengths come from a BFS
/// ball of radius `max t`, which always contains `X_t`.
pub fn moment_bound_check(
    g: &MeasuredGroup,
    t_list: &[u64],
    k: u32,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<MomentRow>, WalkError> {
    let mut times = t_list.to_vec();
    times.sort_unstable();
    times.dedup();
    let t_max = times.last().copied().unwrap_or(0);
    let ball = Ball::build(g, t_max as u32, DEFAULT_NODE_BUDGET)?;
    let start = g.identity();
    let domain = domain_hash(format!("moments|{}", g.name()).as_bytes());
    let moments = fold_indexed(
        n,
        workers,
        || vec![Moments::default(); times.len()],
        |acc, i| {
            let xs = walk_positions(g, &start, seed, domain, i, &times).expect("valid group");
            for (slot, x) in acc.iter_mut().zip(&xs) {
                let len = ball.distance(x).expect("X_t lies in the ball of radius t");
                slot.push((len as f64).powi(k as i32));
            }
        },
        |acc, part| acc.iter_mut().zip(&part).for_each(|(a, p)| a.merge(p)),
    )?;
    Ok(times
        .iter()
        .zip(&moments)
        .map(|(&t, m)| MomentRow {
            t,
            moment: m.mean,
            std_error: m.std_error(),
            ratio: (t > 0).then(|| m.mean / (t as f64).powi(k as i32)),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleCheck {
    pub t: u64,
    pub rho_start: f64,
    pub mean_rho: f64,
    pub std_error: f64,
    pub pass: bool,
}

/// `E[rho(X_t)]` against `rho(X_0)`; passes within 4 standard errors.
pub fn martingale_check(
    g: &MeasuredGroup,
    start: &AffineElement,
    t: u64,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<MartingaleCheck, WalkError> {
    let domain = WalkConfig::default_domain(g, start);
    let m = fold_indexed(
        n,
        workers,
        Moments::default,
        |acc, i| {
            let x = walk_positions(g, start, seed, domain, i, &[t]).expect("valid group");
            acc.push(x[0].rho().to_f64());
        },
        |acc, part| acc.merge(&part),
    )?;
    let rho_start = start.rho().to_f64();
    let se = m.std_error();
    let pass = (m.mean - rho_start).abs() <= 4.0 * se + 1e-12;
    Ok(MartingaleCheck {
        t,
        rho_start,
        mean_rho: m.mean,
        std_error: se,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensorCheck {
    pub r: f64,
    pub max_steps: u64,
    pub n_samples: u64,
    pub n_censored: u64,
    pub pass: bool,
}

pub const CENSOR_LIMIT: f64 = 1e-3;

/// Runs `sigma_r` with the step cap at `100 r^2` and checks that fewer than
/// one in a thousand runs are censored.
pub fn censor_check(
    g: Arc<MeasuredGroup>,
    start: AffineElement,
    r: f64,
    n: u64,
    seed: u64,
    workers: usize,
) -> Result<CensorCheck, WalkError> {
    let max_steps = (100.0 * r * r).ceil() as u64;
    let cfg = WalkConfig::sigma_r(g, start, r, seed).with_max_steps(max_steps);
    let rep = run_ensemble(&cfg, n, &Statistic::stop_time(), workers)?;
    Ok(CensorCheck {
        r,
        max_steps,
        n_samples: n,
        n_censored: rep.n_censored,
        pass: rep.censored_fraction() < CENSOR_LIMIT,
    })
}
