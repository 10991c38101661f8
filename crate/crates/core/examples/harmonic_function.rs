//! The estimated harmonic function f_r(x) = r Pr_x[|c(X_sigma_r)| < 3] on
//! bs12: values along a^-n, the mean-value residual at a point, the linear
//! seminorm profile and the 1/r decay away from c = 0.
//!
//!     cargo run --release --example harmonic_function [r] [samples]

use std::sync::Arc;

use harmonic_walks::groups::{bs12, Word, DEFAULT_NODE_BUDGET};
use harmonic_walks::harmonic::{
    growth_along_x, harmonicity_residual, seminorm_profile, small_c_decay, EstimateCache,
    FHatOracle, FSettings,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let r: f64 = args.next().map_or(Ok(64.0), |s| s.parse())?;
    let n: u64 = args.next().map_or(Ok(20_000), |s| s.parse())?;
    let g = Arc::new(bs12());
    let s = FSettings::new(r, n, 7).with_workers(2);
    let cache = EstimateCache::new();

    let growth = growth_along_x(&g, 6, &s, &cache)?;
    for e in &growth.estimates {
        println!("f_{r}({}) = {:.3} +- {:.3}", e.point, e.value, e.std_error);
    }
    println!(
        "increasing: {}, linear fit {:?}",
        growth.increasing, growth.fit
    );

    let f = FHatOracle::new(g.clone(), s.clone()).with_cache(cache.clone());
    let x = "b a^-2".parse::<Word>()?.evaluate(&g)?;
    let res = harmonicity_residual(&g, &f, &x)?;
    println!(
        "residual at {x}: {:+.4} +- {:.4} ({:.2} se)",
        res.residual, res.std_error, res.sigmas
    );

    let small = FHatOracle::new(
        g.clone(),
        FSettings {
            n_samples: n / 20,
            ..s.clone()
        },
    );
    let prof = seminorm_profile(&g, &small, 1, &[2, 3, 4], DEFAULT_NODE_BUDGET)?;
    for row in &prof.rows {
        println!(
            "R = {}: max |f| / R = {:.3} over {} points (at {})",
            row.radius, row.ratio, row.ball_size, row.argmax
        );
    }

    let far = "b^6 a^-3".parse::<Word>()?.evaluate(&g)?;
    let decay = small_c_decay(&g, &far, &[16.0, 32.0, 64.0], &s, &cache)?;
    println!(
        "Pr_x[|c| < 3] at {far}: slope {:?}",
        decay.fit.map(|f| f.slope)
    );
    Ok(())
}
