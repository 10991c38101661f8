//! Stopped random walks: exit times of the rho-walk, exit sides, the
//! martingale property of rho, word-length moments, and reports that do
//! not depend on the number of workers.
//!
//!     cargo run --release --example stopped_walks

use std::sync::Arc;

use harmonic_walks::groups::{bs12, zline, Word};
use harmonic_walks::walk::{
    censor_check, martingale_check, moment_bound_check, run_ensemble, Height, Interval, Statistic,
    StopKind, StopRule, WalkConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = Arc::new(bs12());
    let n = 100_000;

    for r in [8.0, 16.0, 32.0] {
        let cfg = WalkConfig::sigma_r(g.clone(), g.identity(), r, 1);
        let t = run_ensemble(&cfg, n, &Statistic::stop_time(), 2)?;
        let high = run_ensemble(&cfg, n, &Statistic::exit_high(), 2)?;
        println!(
            "bs12 sigma_{r:<4} E = {:>9.2} +- {:.2}   E/r^2 = {:.3}   Pr[exit high] = {:.4}",
            t.estimate,
            t.std_error,
            t.estimate / (r * r),
            high.estimate
        );
    }

    // zline: rho is trivial, so exit is measured on c; E[sigma_8] = 81
    let z = Arc::new(zline());
    let cfg = WalkConfig::sigma_r(z.clone(), z.identity(), 8.0, 1);
    let t = run_ensemble(&cfg, n, &Statistic::stop_time(), 1)?;
    println!(
        "zline sigma_8    E = {:.2} +- {:.2} (exact 81)",
        t.estimate, t.std_error
    );

    // first entrance of rho into (0, inf)
    let x = "a^3".parse::<Word>()?.evaluate(&g)?;
    let rule = StopRule::Hit {
        height: Height::Rho,
        set: vec![Interval::above(0.0)],
    };
    let cfg = WalkConfig::new(g.clone(), x.clone(), rule, 1).with_max_steps(10_000);
    let hit = run_ensemble(&cfg, 20_000, &Statistic::stopped_by(StopKind::TauSet), 1)?;
    println!(
        "from a^3, Pr[rho enters (0, inf) within 10^4 steps] = {:.4}",
        hit.estimate
    );

    let m = martingale_check(&g, &x, 50, n, 1, 2)?;
    println!(
        "E[rho(X_50)] = {:.4} +- {:.4} vs rho(X_0) = {:.4}: {}",
        m.mean_rho, m.std_error, m.rho_start, m.pass
    );

    for row in moment_bound_check(&g, &[0, 4, 8, 16], 2, 20_000, 1, 2)? {
        println!(
            "t = {:>2}  E|X_t|^2 = {:>8.2}  ratio = {:?}",
            row.t, row.moment, row.ratio
        );
    }

    let c = censor_check(g.clone(), g.identity(), 32.0, 20_000, 1, 2)?;
    println!("censored at 100 r^2: {} of {}", c.n_censored, c.n_samples);

    let cfg = WalkConfig::sigma_r(g.clone(), g.identity(), 16.0, 9);
    let one = run_ensemble(&cfg, 20_000, &Statistic::stop_time(), 1)?;
    let four = run_ensemble(&cfg, 20_000, &Statistic::stop_time(), 4)?;
    println!(
        "1 vs 4 workers identical: {}",
        serde_json::to_string(&one)? == serde_json::to_string(&four)?
    );
    Ok(())
}
