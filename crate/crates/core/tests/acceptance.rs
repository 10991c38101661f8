//! Acceptance run: one PASS/FAIL line per criterion, then a reproducibility
//! pass that reruns every criterion at reduced size under two worker counts.
//!
//! `cargo test --test acceptance -- 3 5` runs only criteria 3 and 5.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use harmonic_walks::groups::{
    bs12, zline, Ball, CosetLabeling, LabelingKind, MeasuredGroup, DEFAULT_NODE_BUDGET,
};
use harmonic_walks::harmonic::{
    c_drift_check, growth_along_x, harmonicity_residual, orbit_independence, seminorm_profile,
    small_c_decay, EstimateCache, FHatOracle, FSettings, RhoOracle,
};
use harmonic_walks::hitting::{hitting_measure_exact, hitting_measure_mc, hitting_time_stats};
use harmonic_walks::line::{
    max_separated, max_separated_brute_force, verify_exit_time, verify_green_function, verify_msep,
    LineLemmaConfig, StepDistribution,
};
use harmonic_walks::walk::{domain_hash, substream_rng};
use rand_core::RngCore;
use serde_json::{json, Value};

const SEED: u64 = 20_240_601;

/// Sample sizes: `Full` for the verdicts, `Small` for the reproducibility
/// reruns, which only compare report bytes.
#[derive(Clone, Copy, PartialEq)]
enum Scale {
    Full,
    Small,
}

impl Scale {
    fn n(self, full: u64, small: u64) -> u64 {
        match self {
            Scale::Full => full,
            Scale::Small => small,
        }
    }
}

struct Outcome {
    pass: bool,
    detail: String,
    report: Value,
}

type Criterion = fn(Scale, usize) -> Result<Outcome, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn labeled(g: MeasuredGroup, kind: LabelingKind) -> (Arc<MeasuredGroup>, CosetLabeling) {
    let lab = CosetLabeling::new(&g, kind).expect("valid labeling");
    (Arc::new(g), lab)
}

/// Gambler's ruin from y = 2 on [-8, 8] against the exact 11/18.
fn exact_oracle(scale: Scale, workers: usize) -> Result<Outcome, String> {
    let mut cfg = LineLemmaConfig::new(StepDistribution::Unit);
    cfg.y = 2.0;
    cfg.r = 8.0;
    cfg.r_values = vec![8.0];
    cfg.n_samples = scale.n(100_000, 2_000);
    cfg.seed = SEED;
    cfg.workers = workers;
    let v = verify_green_function(&cfg).map_err(err)?;
    let m = v
        .values
        .iter()
        .find(|m| m.exact.is_some())
        .ok_or("no exact value")?;
    let exact = m.exact.clone().unwrap_or_default();
    let z = (m.estimate - m.exact_value.unwrap_or(f64::NAN)).abs() / m.std_error;
    Ok(Outcome {
        pass: exact == "11/18" && z <= 3.0,
        detail: format!(
            "p = {:.5} +- {:.5}, exact {exact}, {z:.2} se",
            m.estimate, m.std_error
        ),
        report: to_json(&v),
    })
}

/// E[sigma_r]/r^2 for unit steps, r in {8, 16, 32, 64}.
fn exit_time_law(scale: Scale, workers: usize) -> Result<Outcome, String> {
    let mut cfg = LineLemmaConfig::new(StepDistribution::Unit);
    cfg.r_values = vec![8.0, 16.0, 32.0, 64.0];
    cfg.n_samples = scale.n(100_000, 500);
    cfg.seed = SEED;
    cfg.workers = workers;
    let v = verify_exit_time(&cfg).map_err(err)?;
    let ratios: Vec<String> = v
        .values
        .iter()
        .filter(|m| m.quantity.starts_with("E[sigma_r]"))
        .map(|m| format!("{:.3}", m.estimate))
        .collect();
    let failed: Vec<&str> = v
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect();
    Ok(Outcome {
        pass: v.pass,
        detail: format!(
            "E[sigma_r]/r^2 = [{}], {} checks, failed {failed:?}",
            ratios.join(", "),
            v.checks.len()
        ),
        report: to_json(&v),
    })
}

/// zline with the parity labeling: exact measure and a Monte Carlo match.
fn hitting_exactness(scale: Scale, workers: usize) -> Result<Outcome, String> {
    let (g, lab) = labeled(zline(), LabelingKind::Parity);
    let (exact, tau) = hitting_measure_exact(&g, &lab, 1_000).map_err(err)?;
    let atoms: Vec<(String, String)> = exact
        .support
        .iter()
        .map(|a| {
            (
                a.element.to_string(),
                a.p.exact().map(|q| q.to_string()).unwrap_or_default(),
            )
        })
        .collect();
    let want = [("(0; 1)", "1/2"), ("(-2; 1)", "1/4"), ("(2; 1)", "1/4")];
    let exact_ok = tau.to_string() == "2"
        && atoms.len() == 3
        && want
            .iter()
            .all(|(e, p)| atoms.iter().any(|(ae, ap)| ae == e && ap == p));
    let n = scale.n(100_000, 2_000);
    let mc = hitting_measure_mc(&g, &lab, n, SEED, workers, 100).map_err(err)?;
    let mut worst: f64 = 0.0;
    for a in &exact.support {
        let p_exact = a.p.to_f64();
        let (p, se) = match mc.measure.support.iter().find(|b| b.element == a.element) {
            Some(b) => (b.p.to_f64(), b.std_error.unwrap_or(0.0)),
            None => (0.0, 0.0),
        };
        let z = if se > 0.0 {
            (p - p_exact).abs() / se
        } else if p == p_exact {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
    }
    let extra = mc
        .measure
        .support
        .iter()
        .filter(|b| exact.probability(&b.element).is_none())
        .count();
    let stats = hitting_time_stats(&g, &lab, n, SEED, workers).map_err(err)?;
    let tau_z = if stats.tau.std_error > 0.0 {
        (stats.tau.estimate - 2.0).abs() / stats.tau.std_error
    } else if stats.tau.estimate == 2.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(Outcome {
        pass: exact_ok && worst <= 3.0 && extra == 0 && tau_z <= 3.0,
        detail: format!(
            "exact {atoms:?}, E[tau] = {tau}; MC worst atom {worst:.2} se, E[tau] = {} ({tau_z:.2} se)",
            stats.tau.estimate
        ),
        report: json!({ "exact": exact, "expected_tau": tau.to_string(), "mc": mc, "stats": stats }),
    })
}

/// Word-length tail of the return point to the lambda-exponent-even subgroup.
fn smoothness(scale: Scale, workers: usize) -> Result<Outcome, String> {
    let (g, lab) = labeled(bs12(), LabelingKind::LambdaExponentMod(2));
    let mc =
        hitting_measure_mc(&g, &lab, scale.n(100_000, 2_000), SEED, workers, 50).map_err(err)?;
    let fit = &mc.word_length.fit;
    Ok(Outcome {
        pass: fit.slope.is_some_and(|s| s < 0.0) && mc.all_in_subgroup,
        detail: format!(
            "log-survival slope {:?}, R^2 {:?}, radius {}, all returns in H: {}",
            fit.slope.map(|s| (s * 1e4).round() / 1e4),
            fit.r2.map(|s| (s * 1e4).round() / 1e4),
            mc.word_length.radius,
            mc.all_in_subgroup
        ),
        report: to_json(&mc),
    })
}

/// Four points of the radius-4 ball other than the identity, chosen by a
/// fixed stream.
fn random_ball_points(g: &MeasuredGroup) -> Vec<harmonic_walks::groups::AffineElement> {
    let ball = Ball::build(g, 4, DEFAULT_NODE_BUDGET).expect("small ball");
    let mut pool: Vec<_> = ball
        .elements()
        .filter(|x| !x.is_identity())
        .cloned()
        .collect();
    let mut rng = substream_rng(SEED, domain_hash(b"acceptance ball points"), 0, 0);
    (0..4)
        .map(|_| pool.swap_remove((rng.next_u64() % pool.len() as u64) as usize))
        .collect()
}

/// Residuals of f_64 and of rho at the identity and four ball points.
fn harmonicity(scale: Scale, workers: usize) -> Result<Outcome, String> {
    let g = Arc::new(bs12());
    let s = FSettings::new(64.0, scale.n(1_000_000, 500), SEED).with_workers(workers);
    let f = FHatOracle::new(g.clone(), s);
    let mut points = vec![g.identity()];
    points.extend(random_ball_points(&g));
    let mut reports = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for x in &points {
        let rep = harmonicity_residual(&g, &f, x).map_err(err)?;
        let rho = harmonicity_residual(&g, &RhoOracle, x).map_err(err)?;
        let rho_zero = rho.exact_residual.as_deref() == Some("0");
        pass &= rep.sigmas <= 3.0 && rho_zero;
        parts.push(format!(
            "{x}: {:+.4} +- {:.4} ({:.2} se), rho {}",
            rep.residual,
            rep.std_error,
            rep.sigmas,
            rho.exact_residual.as_deref().unwrap_or("inexact")
        ));
        reports.push(json!({ "f_hat": rep, "rho": rho }));
    }
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
        report: Value::Array(reports),
    })
}

/// Growth of f_128 along a^-n and the k = 1 seminorm profile.
fn growth(scale: Scale, workers: usize) -> Result<Outcome, String> {
    let g = Arc::new(bs12());
    let cache = EstimateCache::default();
    let s = FSettings::new(128.0, scale.n(100_000, 200), SEED).with_workers(workers);
    let gr = growth_along_x(&g, 8, &s, &cache).map_err(err)?;
    let f = FHatOracle::new(
        g.clone(),
        FSettings {
            n_samples: scale.n(2_000, 20),
            ..s
        },
    );
    let prof = seminorm_profile(&g, &f, 1, &[4, 6, 8], DEFAULT_NODE_BUDGET).map_err(err)?;
    let values: Vec<String> = gr
        .estimates
        .iter()
        .map(|e| format!("{:.3}", e.value))
        .collect();
    let ratios: Vec<String> = prof
        .rows
        .iter()
        .map(|r| format!("{:.3}", r.ratio))
        .collect();
    Ok(Outcome {
        pass: gr.pass && prof.within_band(3.0),
        detail: format!(
            "f(a^-n) = [{}], increasing {}, R^2 {:.4}; seminorm ratios [{}], band {:.3}",
            values.join(", "),
            gr.increasing,
            gr.fit.map_or(f64::NAN, |f| f.r2),
            ratios.join(", "),
            prof.band
        ),
        report: json!({ "growth": gr, "seminorm": prof }),
    })
}

/// 1/r decay of the drift event and of the small-c probability at b^6 a^-3.
fn decay(scale: Scale, workers: usize) -> Result<Outcome, String> {
    let g = Arc::new(bs12());
    // |c| = 6 > 5 with 0 < rho < r, as the drift event needs
    let x = g
        .z_element()
        .expect("bs12 has z")
        .pow(6)
        .mul(&g.x_element().expect("bs12 has x").pow(-3))
        .map_err(err)?;
    let rs = [16.0, 32.0, 64.0];
    let n = scale.n(100_000, 1_000);
    let drift = c_drift_check(&g, &x, &rs, Some(2), n, SEED, workers).map_err(err)?;
    let s = FSettings::new(64.0, n, SEED).with_workers(workers);
    let small = small_c_decay(&g, &x, &rs, &s, &EstimateCache::default()).map_err(err)?;
    let slope = |f: Option<harmonic_walks::stats::LinearFit>| f.map_or(f64::NAN, |f| f.slope);
    Ok(Outcome {
        pass: drift.pass && small.pass,
        detail: format!(
            "at {x}: drift slope {:.3}, small-c slope {:.3}, accepted range [-1.5, -0.5]",
            slope(drift.fit),
            slope(small.fit)
        ),
        report: json!({ "drift": drift, "small_c": small }),
    })
}

/// Gram rank of conjugated copies of f_64.
fn orbit_rank(scale: Scale, workers: usize) -> Result<Outcome, String> {
    let g = Arc::new(bs12());
    let s = FSettings::new(64.0, scale.n(100_000, 100), SEED).with_workers(workers);
    let rep = orbit_independence(&g, 3, 12, &s, &EstimateCache::default()).map_err(err)?;
    let sv: Vec<String> = rep
        .singular_values
        .iter()
        .map(|v| format!("{v:.3e}"))
        .collect();
    Ok(Outcome {
        pass: rep.rank == 3 && rep.off_diagonal_c_above_5 && rep.off_diagonal_c_at_bound && rep.separation_bound >= 12.0,
        detail: format!(
            "rank {}, singular values [{}], N = {}, |c| bound {}, all off-diagonal |c| >= bound: {}",
            rep.rank,
            sv.join(", "),
            rep.conjugation,
            rep.separation_bound,
            rep.off_diagonal_c_at_bound
        ),
        report: to_json(&rep),
    })
}

/// Separated-set decay in r and greedy against brute force.
fn separated_sets(scale: Scale, workers: usize) -> Result<Outcome, String> {
    let mut cfg = LineLemmaConfig::new(StepDistribution::Unit);
    cfg.y = 0.0;
    cfg.q = 1.0;
    cfg.n_samples = scale.n(100_000, 2_000);
    cfg.seed = SEED;
    cfg.workers = workers;
    let v = verify_msep(&cfg).map_err(err)?;
    let mut slopes = Vec::new();
    let mut pass = true;
    for n in 0..=2 {
        let name = format!("decay in r, n = {n}");
        match v.checks.iter().find(|c| c.name == name) {
            Some(c) => {
                pass &= c.pass;
                slopes.push(format!("{:.3}", c.value));
            }
            None => {
                pass = false;
                slopes.push("missing".into());
            }
        }
    }
    let mut rng = substream_rng(SEED, domain_hash(b"acceptance separated sets"), 0, 0);
    let mut mismatches = 0;
    let mut sets = Vec::new();
    for _ in 0..500 {
        let len = (rng.next_u64() % 16) as usize;
        // quarter-integer grid on [0, 8): exact gaps, many ties at distance 1
        let pts: Vec<f64> = (0..len)
            .map(|_| (rng.next_u64() % 32) as f64 / 4.0)
            .collect();
        let (greedy, brute) = (max_separated(&pts), max_separated_brute_force(&pts));
        mismatches += (greedy != brute) as usize;
        sets.push(json!({ "points": pts, "greedy": greedy, "brute_force": brute }));
    }
    pass &= mismatches == 0;
    Ok(Outcome {
        pass,
        detail: format!(
            "decay slopes for n = 0, 1, 2: [{}]; greedy vs brute force: {mismatches} of 500 differ",
            slopes.join(", ")
        ),
        report: json!({ "msep": v, "sets": sets }),
    })
}

const CRITERIA: [(&str, Criterion); 9] = [
    ("exact oracle agreement", exact_oracle),
    ("exit-time law", exit_time_law),
    ("hitting measure exactness", hitting_exactness),
    ("smoothness propagation", smoothness),
    ("harmonicity", harmonicity),
    ("linear growth and seminorm", growth),
    ("1/r decay", decay),
    ("orbit rank", orbit_rank),
    ("separated sets", separated_sets),
];

fn render(r: &Result<Outcome, String>) -> String {
    match r {
        Ok(o) => {
            serde_json::to_string(&json!({ "pass": o.pass, "report": o.report })).expect("json")
        }
        Err(e) => format!("error: {e}"),
    }
}

fn line(id: usize, name: &str, pass: bool, secs: f64, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {name:<28} {verdict}  [{secs:.1}s] {detail}");
}

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let run = |id: usize| wanted.is_empty() || wanted.contains(&id);
    let mut all = true;
    let mut full_reports: Vec<Option<String>> = vec![None; CRITERIA.len()];
    for (i, (name, f)) in CRITERIA.iter().enumerate() {
        if !run(i + 1) {
            continue;
        }
        let t = Instant::now();
        let out = f(Scale::Full, 1);
        let secs = t.elapsed().as_secs_f64();
        match &out {
            Ok(o) => line(i + 1, name, o.pass, secs, &o.detail),
            Err(e) => line(i + 1, name, false, secs, &format!("error: {e}")),
        }
        all &= out.as_ref().is_ok_and(|o| o.pass);
        full_reports[i] = Some(render(&out));
    }
    if run(10) {
        // Every criterion rerun at reduced size: twice with one worker, once
        // with three. The cheap ones are also rerun at full size.
        let t = Instant::now();
        let mut differ = Vec::new();
        for (i, (_, f)) in CRITERIA.iter().enumerate() {
            let a = render(&f(Scale::Small, 1));
            let b = render(&f(Scale::Small, 1));
            let c = render(&f(Scale::Small, 3));
            if a != b || a != c {
                differ.push(format!("{} (reduced)", i + 1));
            }
            let cheap = matches!(i + 1, 1 | 2 | 3 | 4 | 9);
            if let (true, Some(full)) = (cheap, &full_reports[i]) {
                if *full != render(&f(Scale::Full, 3)) {
                    differ.push(format!("{} (full)", i + 1));
                }
            }
        }
        let pass = differ.is_empty();
        all &= pass;
        let detail = if pass {
            "criteria 1-9 byte-identical across reruns and 1 vs 3 workers".to_string()
        } else {
            format!("reports differ: {differ:?}")
        };
        line(
            10,
            "reproducibility",
            pass,
            t.elapsed().as_secs_f64(),
            &detail,
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
