use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::stats::{linear_fit, loglog_fit, tail_fit, Moments, TailFit};
use crate::walk::{default_max_steps, fold_indexed, CENSOR_LIMIT};

use super::oracle::{self, LatticeChain};
use super::{run_line, LemmaId, LemmaVerdict, LineError, LineExit, LineLemmaConfig, Measurement};

/// Exit-time ratios must stay within this fraction of each other and of the
/// exact values.
pub const EXIT_RATIO_SLACK: f64 = 0.2;
/// Tail fits count as linear above this R^2.
pub const TAIL_R2: f64 = 0.9;
/// Big-jump fits use sweep points with probability at most this.
pub const KNEE_PROBABILITY: f64 = 0.5;
/// Agreement with an exact value, in standard errors.
pub const ORACLE_SIGMAS: f64 = 3.0;
/// Slack on "the deviation shrinks", in standard errors of the difference.
pub const SHRINK_SIGMAS: f64 = 2.0;
/// `|slope| m^2` must lie within a factor 2 of a common value, so the
/// largest and smallest differ by at most this factor.
pub const OCCUPATION_BAND: f64 = 4.0;
/// Relative agreement of an occupation tail slope with its exact rate.
pub const OCCUPATION_RATE_TOL: f64 = 0.25;
/// Accepted range of `|slope| m^2` for each window.
pub const OCCUPATION_SCALE_RANGE: (f64, f64) = (0.1, 10.0);
pub const MIN_CONDITIONED: u64 = 200;
/// Accepted log-log slope of `Pr[MS_r <= n]` against `r`.
pub const MSEP_SLOPE_RANGE: (f64, f64) = (-1.5, -0.5);
/// Largest accepted log-log slope of `Pr[MS_r <= n]` against `n + 1`.
pub const MSEP_GROWTH_MAX: f64 = 1.25;

fn sample_all<T: Send>(
    cfg: &LineLemmaConfig,
    f: impl Fn(u64) -> T + Sync,
) -> Result<Vec<T>, LineError> {
    Ok(fold_indexed(
        cfg.n_samples,
        cfg.workers,
        Vec::new,
        |acc, i| acc.push(f(i)),
        |acc, mut part| acc.append(&mut part),
    )?)
}

fn guard_censoring(r: f64, censored: usize, n: u64) -> Result<(), LineError> {
    let fraction = censored as f64 / n as f64;
    if fraction > CENSOR_LIMIT {
        return Err(LineError::TooManyCensored {
            r,
            fraction,
            limit: CENSOR_LIMIT,
        });
    }
    Ok(())
}

fn as_int(x: f64) -> Option<i64> {
    (x.fract() == 0.0 && x.abs() < 1e15).then_some(x as i64)
}

fn at(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn proportion(hits: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

fn measurement(
    quantity: &str,
    at: BTreeMap<String, f64>,
    estimate: f64,
    se: f64,
    n: u64,
) -> Measurement {
    Measurement {
        quantity: quantity.to_string(),
        at,
        estimate,
        std_error: se,
        n_samples: n,
        exact: None,
        exact_value: None,
    }
}

fn with_exact(mut m: Measurement, exact: Option<&BigRational>) -> Measurement {
    if let Some(e) = exact {
        m.exact = Some(e.to_string());
        m.exact_value = e.to_f64();
    }
    m
}

/// Records a tail fit as a fit plus a "decays linearly" check.
fn tail_check(verdict: &mut LemmaVerdict, name: &str, tf: &TailFit, need_r2: bool) -> Option<f64> {
    if tf.finite_support {
        verdict.check(
            format!("{name} decays"),
            0.0,
            "finite support or slope < 0",
            true,
        );
        verdict.notes.push(format!(
            "{name}: fewer than three distinct values, tail is empty"
        ));
        return None;
    }
    match tf.fit {
        Some(fit) => {
            verdict.fit(name, &fit);
            verdict.check(format!("{name} slope"), fit.slope, "< 0", fit.slope < 0.0);
            if need_r2 {
                verdict.check(
                    format!("{name} r2"),
                    fit.r2,
                    format!("> {TAIL_R2}"),
                    fit.r2 > TAIL_R2,
                );
            }
            Some(fit.slope)
        }
        None => {
            verdict.check(format!("{name} slope"), f64::NAN, "< 0", false);
            None
        }
    }
}

/// `E[sigma_r] / r^2` bounded across `r`, and an exponential tail of
/// `sigma_r / r^2`.
pub fn verify_exit_time(cfg: &LineLemmaConfig) -> Result<LemmaVerdict, LineError> {
    cfg.check_common()?;
    let mut verdict = LemmaVerdict::new(LemmaId::ExitTime, cfg);
    let sampler = cfg.distribution.sampler();
    let domain = cfg.domain(LemmaId::ExitTime);
    let mut ratios = Vec::new();
    for r in cfg.r_sweep(&[8.0, 16.0, 32.0, 64.0]) {
        if !(r > 0.0) {
            return Err(LineError::InvalidConfig(format!(
                "r must be positive, got {r}"
            )));
        }
        let cap = default_max_steps(r);
        let runs = sample_all(cfg, |i| {
            run_line(
                &sampler,
                cfg.seed,
                domain,
                i,
                cfg.y,
                (-r, r),
                cap,
                |_| true,
                |_| {},
            )
        })?;
        let censored = runs
            .iter()
            .filter(|(_, e)| *e == LineExit::Censored)
            .count();
        guard_censoring(r, censored, cfg.n_samples)?;
        let scaled: Vec<f64> = runs
            .iter()
            .filter(|(_, e)| *e != LineExit::Censored)
            .map(|&(t, _)| t as f64 / (r * r))
            .collect();
        let m = Moments::from_slice(&scaled);
        let exact = match (as_int(r), as_int(cfg.y)) {
            (Some(ri), Some(yi)) if yi.abs() <= ri => {
                oracle::exit_time(cfg.distribution, ri, yi).ok()
            }
            _ => None,
        };
        let exact_ratio = exact
            .as_ref()
            .map(|e| e.to_f64().unwrap_or(f64::NAN) / (r * r));
        verdict.values.push(with_exact(
            measurement(
                "E[sigma_r]/r^2",
                at(&[("r", r)]),
                m.mean,
                m.std_error(),
                m.n,
            ),
            exact
                .as_ref()
                .map(|e| e / BigRational::from_float(r * r).expect("finite"))
                .as_ref(),
        ));
        if let Some(e) = exact_ratio.filter(|e| *e > 0.0) {
            let rel = m.mean / e;
            verdict.check(
                format!("E[sigma_r]/r^2 vs exact, r = {r}"),
                rel,
                format!("within {EXIT_RATIO_SLACK} of 1"),
                (rel - 1.0).abs() <= EXIT_RATIO_SLACK,
            );
        }
        ratios.push(m.mean);
        tail_check(
            &mut verdict,
            &format!("log-survival of sigma_r/r^2, r = {r}"),
            &tail_fit(&scaled),
            true,
        );
    }
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if max > 0.0 { min / max } else { 1.0 };
    verdict.check(
        "min/max of E[sigma_r]/r^2",
        spread,
        format!(">= {}", 1.0 - EXIT_RATIO_SLACK),
        spread >= 1.0 - EXIT_RATIO_SLACK,
    );
    Ok(verdict)
}

/// `Pr_y[some |Z_t| > z, t <= sigma_r]` over a sweep of `z`, decaying
/// exponentially in `z` once jumps are rare.
pub fn verify_big_jump(cfg: &LineLemmaConfig) -> Result<LemmaVerdict, LineError> {
    cfg.check_common()?;
    let r = cfg.r;
    if !(cfg.y.abs() < r) {
        return Err(LineError::InvalidConfig(format!(
            "need |y| < r, got y = {}, r = {r}",
            cfg.y
        )));
    }
    let mut zs = if cfg.z_values.is_empty() {
        vec![4.0, 8.0, 12.0]
    } else {
        cfg.z_values.clone()
    };
    if !zs.contains(&cfg.z) {
        zs.push(cfg.z);
    }
    zs.sort_by(f64::total_cmp);
    if zs.iter().any(|&z| !(z > 0.0)) {
        return Err(LineError::InvalidConfig(
            "jump sizes z must be positive".into(),
        ));
    }
    let mut verdict = LemmaVerdict::new(LemmaId::BigJump, cfg);
    let sampler = cfg.distribution.sampler();
    let domain = cfg.domain(LemmaId::BigJump);
    let cap = default_max_steps(r);
    let runs = sample_all(cfg, |i| {
        let mut biggest = 0i64;
        let (_, exit) = run_line(
            &sampler,
            cfg.seed,
            domain,
            i,
            cfg.y,
            (-r, r),
            cap,
            |_| true,
            |z| biggest = biggest.max(z.abs()),
        );
        (biggest, exit)
    })?;
    let censored = runs
        .iter()
        .filter(|(_, e)| *e == LineExit::Censored)
        .count();
    guard_censoring(r, censored, cfg.n_samples)?;
    let done: Vec<i64> = runs
        .iter()
        .filter(|(_, e)| *e != LineExit::Censored)
        .map(|&(b, _)| b)
        .collect();
    let mut rare = Vec::new();
    for &z in &zs {
        let (p, se) = proportion(done.iter().filter(|&&b| b as f64 > z).count(), done.len());
        verdict.values.push(measurement(
            "Pr[max |Z_t| > z]",
            at(&[("r", r), ("z", z)]),
            p,
            se,
            done.len() as u64,
        ));
        if p > 0.0 && p <= KNEE_PROBABILITY {
            rare.push((z, p.ln()));
        }
    }
    let reaches_zero = verdict.values.iter().any(|m| m.estimate == 0.0);
    if rare.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rare.into_iter().unzip();
        let fit = linear_fit(&xs, &ys).expect("distinct z");
        verdict.fit("ln Pr[max |Z_t| > z] against z", &fit);
        verdict.check("decay slope in z", fit.slope, "< 0", fit.slope < 0.0);
    } else if reaches_zero {
        verdict.check("decay slope in z", f64::NEG_INFINITY, "< 0", true);
        verdict
            .notes
            .push("no jump exceeds the largest sizes of the sweep".into());
    } else {
        verdict.check("decay slope in z", f64::NAN, "< 0", false);
        verdict.notes.push(format!(
            "fewer than two sweep points with 0 < p <= {KNEE_PROBABILITY}"
        ));
    }
    if let super::StepDistribution::SymGeometric { q } = cfg.distribution {
        verdict.notes.push(format!(
            "per-step tail Pr(|Z| > z) = q^z gives slope ln q = {:.4}",
            q.ln()
        ));
    }
    Ok(verdict)
}

/// `Pr_y[tau_(r, inf) < tau_(-inf, -r)]` against `(y + r) / 2r`.
pub fn verify_green_function(cfg: &LineLemmaConfig) -> Result<LemmaVerdict, LineError> {
    cfg.check_common()?;
    let mut verdict = LemmaVerdict::new(LemmaId::GreenFunction, cfg);
    let sampler = cfg.distribution.sampler();
    let domain = cfg.domain(LemmaId::GreenFunction);
    let mut previous: Option<(f64, f64)> = None;
    for r in cfg.r_sweep(&[16.0, 32.0, 64.0]) {
        if !(cfg.y.abs() < r) {
            return Err(LineError::InvalidConfig(format!(
                "need |y| < r, got y = {}, r = {r}",
                cfg.y
            )));
        }
        let cap = default_max_steps(r);
        let runs = sample_all(cfg, |i| {
            run_line(
                &sampler,
                cfg.seed,
                domain,
                i,
                cfg.y,
                (-r, r),
                cap,
                |_| true,
                |_| {},
            )
            .1
        })?;
        let censored = runs.iter().filter(|e| **e == LineExit::Censored).count();
        guard_censoring(r, censored, cfg.n_samples)?;
        let done = runs.len() - censored;
        let (p, se) = proportion(runs.iter().filter(|e| **e == LineExit::Above).count(), done);
        let exact = match (as_int(r), as_int(cfg.y)) {
            (Some(ri), Some(yi)) => oracle::exit_right(cfg.distribution, ri, yi).ok(),
            _ => None,
        };
        verdict.values.push(with_exact(
            measurement(
                "Pr[exit right]",
                at(&[("r", r), ("y", cfg.y)]),
                p,
                se,
                done as u64,
            ),
            exact.as_ref(),
        ));
        if let Some(e) = exact.as_ref().and_then(|e| e.to_f64()) {
            let z = if se > 0.0 {
                (p - e).abs() / se
            } else {
                ((p - e).abs() > 0.0) as u8 as f64 * f64::INFINITY
            };
            verdict.check(
                format!("exact agreement, r = {r}"),
                z,
                format!("<= {ORACLE_SIGMAS} standard errors"),
                z <= ORACLE_SIGMAS,
            );
        }
        let linear = (cfg.y + r) / (2.0 * r);
        let dev = (p - linear).abs();
        verdict.values.push(measurement(
            "|Pr[exit right] - (y+r)/2r|",
            at(&[("r", r), ("y", cfg.y)]),
            dev,
            se,
            done as u64,
        ));
        if let Some((prev_dev, prev_se)) = previous {
            let excess = dev - prev_dev - SHRINK_SIGMAS * (se * se + prev_se * prev_se).sqrt();
            verdict.check(
                format!("deviation shrinks up to r = {r}"),
                excess,
                format!("<= 0 (with {SHRINK_SIGMAS} standard errors of slack)"),
                excess <= 0.0,
            );
        }
        previous = Some((dev, se));
    }
    Ok(verdict)
}

/// Tails of the time `V_m` spent in `[0, m]` before leaving `[0, r]`, with
/// and without the event `B` of leaving on the right.
pub fn verify_occupation_time(cfg: &LineLemmaConfig) -> Result<LemmaVerdict, LineError> {
    cfg.check_common()?;
    let r = cfg.r;
    let ms = if cfg.m_values.is_empty() {
        vec![2.0, 4.0, 8.0]
    } else {
        cfg.m_values.clone()
    };
    if !(0.0 < cfg.y && cfg.y < r) {
        return Err(LineError::InvalidConfig(format!(
            "need 0 < y < r, got y = {}, r = {r}",
            cfg.y
        )));
    }
    if ms.iter().any(|&m| !(0.0 < m && m < r)) {
        return Err(LineError::InvalidConfig(format!(
            "need 0 < m < r for every m in {ms:?}"
        )));
    }
    let mut verdict = LemmaVerdict::new(LemmaId::OccupationTime, cfg);
    let sampler = cfg.distribution.sampler();
    let domain = cfg.domain(LemmaId::OccupationTime);
    let cap = default_max_steps(r);
    let runs = sample_all(cfg, |i| {
        let mut v = vec![0u64; ms.len()];
        let (_, exit) = run_line(
            &sampler,
            cfg.seed,
            domain,
            i,
            cfg.y,
            (0.0, r),
            cap,
            |s| {
                let pos = cfg.y + s as f64;
                for (slot, &m) in v.iter_mut().zip(&ms) {
                    *slot += (pos <= m) as u64;
                }
                true
            },
            |_| {},
        );
        (v, exit)
    })?;
    let censored = runs
        .iter()
        .filter(|(_, e)| *e == LineExit::Censored)
        .count();
    guard_censoring(r, censored, cfg.n_samples)?;
    let done: Vec<&(Vec<u64>, LineExit)> = runs
        .iter()
        .filter(|(_, e)| *e != LineExit::Censored)
        .collect();
    let in_b: Vec<&&(Vec<u64>, LineExit)> =
        done.iter().filter(|(_, e)| *e == LineExit::Above).collect();
    let (p_b, se_b) = proportion(in_b.len(), done.len());
    verdict.values.push(measurement(
        "Pr[B]",
        at(&[("r", r), ("y", cfg.y)]),
        p_b,
        se_b,
        done.len() as u64,
    ));
    if (in_b.len() as u64) < MIN_CONDITIONED {
        return Err(LineError::RareConditioning {
            count: in_b.len() as u64,
            needed: MIN_CONDITIONED,
        });
    }
    let lattice = as_int(cfg.y).is_some() && as_int(r).is_some();
    let mut normalized = Vec::new();
    for (k, &m) in ms.iter().enumerate() {
        let values: Vec<f64> = done.iter().map(|(v, _)| v[k] as f64).collect();
        let level = cfg.v * m * m;
        let (p, se) = proportion(values.iter().filter(|&&x| x > level).count(), values.len());
        verdict.values.push(measurement(
            "Pr[V_m > v m^2]",
            at(&[("m", m), ("r", r), ("v", cfg.v)]),
            p,
            se,
            values.len() as u64,
        ));
        let slope = tail_check(
            &mut verdict,
            &format!("log-survival of V_m, m = {m}"),
            &tail_fit(&values),
            false,
        );
        if let Some(s) = slope {
            let kappa = s.abs() * m * m;
            normalized.push(kappa);
            verdict.values.push(measurement(
                "|slope| m^2",
                at(&[("m", m), ("r", r)]),
                kappa,
                f64::NAN,
                values.len() as u64,
            ));
            let (lo, hi) = OCCUPATION_SCALE_RANGE;
            verdict.check(
                format!("|slope| m^2, m = {m}"),
                kappa,
                format!("in [{lo}, {hi}]"),
                (lo..=hi).contains(&kappa),
            );
        }
        let exact_rate = if lattice && m.fract() == 0.0 {
            oracle::occupation_decay(cfg.distribution, r as i64, m as i64).ok()
        } else {
            None
        };
        if let (Some(e), Some(s)) = (exact_rate, slope) {
            let mut meas = measurement(
                "tail slope of V_m",
                at(&[("m", m), ("r", r)]),
                s,
                f64::NAN,
                values.len() as u64,
            );
            meas.exact_value = Some(e);
            verdict.values.push(meas);
            let rel = (s - e).abs() / e.abs();
            verdict.check(
                format!("tail slope vs exact rate, m = {m}"),
                rel,
                format!("<= {OCCUPATION_RATE_TOL} relative"),
                rel <= OCCUPATION_RATE_TOL,
            );
        }
        let conditioned: Vec<f64> = in_b.iter().map(|(v, _)| v[k] as f64).collect();
        tail_check(
            &mut verdict,
            &format!("log-survival of V_m given B, m = {m}"),
            &tail_fit(&conditioned),
            false,
        );
        if lattice {
            let chain = LatticeChain::new(cfg.distribution, 0, r as i64)?;
            let sup = (0..=m.floor() as i64)
                .filter_map(|x| chain.exit_above(x).ok())
                .max()
                .expect("nonempty window");
            verdict.values.push(with_exact(
                measurement(
                    "sup over [0, m] of Pr_x[B]",
                    at(&[("m", m), ("r", r)]),
                    f64::NAN,
                    f64::NAN,
                    0,
                ),
                Some(&sup),
            ));
        }
    }
    if normalized.len() == ms.len() && !normalized.is_empty() {
        let max = normalized.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = normalized.iter().cloned().fold(f64::INFINITY, f64::min);
        verdict.check(
            "max/min of |slope| m^2",
            max / min,
            format!("<= {OCCUPATION_BAND} (factor 2 around a common scale)"),
            max / min <= OCCUPATION_BAND,
        );
    }
    Ok(verdict)
}

/// `Pr_y[MS_r((-inf, -q)) <= n]` for `n <= sqrt r`: order `1/r` in `r`, at
/// most linear in `n + 1`.
pub fn verify_msep(cfg: &LineLemmaConfig) -> Result<LemmaVerdict, LineError> {
    cfg.check_common()?;
    let (y, q) = (cfg.y, cfg.q);
    if !(y <= 0.0 && q > 0.0) {
        return Err(LineError::InvalidConfig(format!(
            "need y <= 0 and q > 0, got y = {y}, q = {q}"
        )));
    }
    let rs = cfg.r_sweep(&[16.0, 32.0, 64.0]);
    for &r in &rs {
        if !(r > 2.0 * (-y).max(q)) {
            return Err(LineError::InvalidConfig(format!(
                "need r > 2 max(-y, q), got r = {r}"
            )));
        }
    }
    let mut verdict = LemmaVerdict::new(LemmaId::Msep, cfg);
    let sampler = cfg.distribution.sampler();
    let domain = cfg.domain(LemmaId::Msep);
    let common_n = rs
        .iter()
        .map(|r| r.sqrt().floor() as u64)
        .min()
        .unwrap_or(0);
    // probs[r index][n]
    let mut probs: Vec<Vec<(f64, f64)>> = Vec::new();
    for &r in &rs {
        let n_max = r.sqrt().floor() as u64;
        let cap = default_max_steps(r);
        let runs = sample_all(cfg, |i| msep_run(&sampler, cfg, domain, i, r, cap, n_max))?;
        let censored = runs
            .iter()
            .filter(|(_, e)| *e == LineExit::Censored)
            .count();
        guard_censoring(r, censored, cfg.n_samples)?;
        let done: Vec<u64> = runs
            .iter()
            .filter(|(_, e)| *e != LineExit::Censored)
            .map(|&(c, _)| c)
            .collect();
        let mut row = Vec::new();
        for n in 0..=n_max {
            let (p, se) = proportion(done.iter().filter(|&&c| c <= n).count(), done.len());
            let exact = match (cfg.distribution, as_int(r), as_int(y)) {
                (super::StepDistribution::Unit, Some(ri), Some(yi)) => {
                    oracle::msep_unit(ri, q, n, yi).ok()
                }
                _ => None,
            };
            verdict.values.push(with_exact(
                measurement(
                    "Pr[MS_r <= n]",
                    at(&[("n", n as f64), ("q", q), ("r", r), ("y", y)]),
                    p,
                    se,
                    done.len() as u64,
                ),
                exact.as_ref(),
            ));
            if let Some(e) = exact.as_ref().and_then(|e| e.to_f64()) {
                let z = if se > 0.0 {
                    (p - e).abs() / se
                } else {
                    ((p - e).abs() > 0.0) as u8 as f64 * f64::INFINITY
                };
                verdict.check(
                    format!("exact agreement, r = {r}, n = {n}"),
                    z,
                    "<= 4 standard errors",
                    z <= 4.0,
                );
            }
            row.push((p, se));
        }
        let ns: Vec<f64> = (0..=n_max).map(|n| n as f64 + 1.0).collect();
        let ps: Vec<f64> = row.iter().map(|&(p, _)| p).collect();
        match loglog_fit(&ns, &ps).filter(|f| f.n == ns.len()) {
            Some(fit) => {
                verdict.fit(format!("ln Pr[MS_r <= n] against ln(n+1), r = {r}"), &fit);
                verdict.check(
                    format!("growth in n, r = {r}"),
                    fit.slope,
                    format!("<= {MSEP_GROWTH_MAX}"),
                    fit.slope <= MSEP_GROWTH_MAX,
                );
            }
            None => verdict.check(
                format!("growth in n, r = {r}"),
                f64::NAN,
                "all probabilities positive",
                false,
            ),
        }
        probs.push(row);
    }
    if rs.len() >= 2 {
        for n in 0..=common_n {
            let ps: Vec<f64> = probs.iter().map(|row| row[n as usize].0).collect();
            let (lo, hi) = MSEP_SLOPE_RANGE;
            match loglog_fit(&rs, &ps).filter(|f| f.n == rs.len()) {
                Some(fit) => {
                    verdict.fit(format!("ln Pr[MS_r <= {n}] against ln r"), &fit);
                    verdict.check(
                        format!("decay in r, n = {n}"),
                        fit.slope,
                        format!("in [{lo}, {hi}]"),
                        (lo..=hi).contains(&fit.slope),
                    );
                }
                None => verdict.check(
                    format!("decay in r, n = {n}"),
                    f64::NAN,
                    "all probabilities positive",
                    false,
                ),
            }
        }
    }
    Ok(verdict)
}

/// Number of distinct values in `(-inf, -q)` visited before `sigma_r`, capped
/// just above `n_max`. Values are `y` plus integers, so distinct values are
/// 1-separated and the count is the maximal separated subset size.
fn msep_run(
    sampler: &super::steps::StepSampler,
    cfg: &LineLemmaConfig,
    domain: u64,
    index: u64,
    r: f64,
    cap: u64,
    n_max: u64,
) -> (u64, LineExit) {
    let (y, q) = (cfg.y, cfg.q);
    // offsets s with y + s in [-r, r]
    let base = (-r - y).ceil() as i64;
    let width = ((r - y).floor() as i64 - base + 1).max(0) as usize;
    let mut seen = vec![false; width];
    let mut count = 0u64;
    let (_, exit) = run_line(
        sampler,
        cfg.seed,
        domain,
        index,
        y,
        (-r, r),
        cap,
        |s| {
            if y + (s as f64) < -q {
                let slot = &mut seen[(s - base) as usize];
                if !*slot {
                    *slot = true;
                    count += 1;
                }
            }
            count <= n_max
        },
        |_| {},
    );
    (count, exit)
}
