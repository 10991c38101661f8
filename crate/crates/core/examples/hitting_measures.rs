//! First-return distributions to finite-index subgroups: exact rational
//! measures from a sparse linear solve, Monte Carlo measures with a
//! word-length tail check, and E[tau_H] against the index.
//!
//!     cargo run --release --example hitting_measures

use std::sync::Arc;

use num_traits::ToPrimitive;

use harmonic_walks::groups::{bs12, zline, CosetLabeling, LabelingKind};
use harmonic_walks::hitting::{hitting_measure_exact, hitting_measure_mc, hitting_time_stats};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let z = zline();
    let parity = CosetLabeling::new(&z, LabelingKind::Parity)?;
    let (mu, tau) = hitting_measure_exact(&z, &parity, 1_000)?;
    println!("zline, parity: E[tau_H] = {tau}");
    for atom in &mu.support {
        println!("  mu_H{} = {}", atom.element, atom.p);
    }

    let g = Arc::new(bs12());
    let even = CosetLabeling::new(&g, LabelingKind::LambdaExponentMod(2))?;
    let (mu, tau) = hitting_measure_exact(&g, &even, 2_000)?;
    // exact over the truncated chain, so the rationals are long; print floats
    println!(
        "bs12, lambda-mod:2 (truncated solve): E[tau_H] ~ {:.9}, unlisted mass {:.2e}",
        tau.to_f64().unwrap_or(f64::NAN),
        mu.residual.to_f64()
    );
    for atom in mu.support.iter().take(5) {
        println!("  mu_H{} ~ {:.6}", atom.element, atom.p.to_f64());
    }

    let mc = hitting_measure_mc(&g, &even, 100_000, 1, 2, 5)?;
    println!(
        "Monte Carlo, {} distinct return points:",
        mc.distinct_points
    );
    for atom in &mc.measure.support {
        println!(
            "  mu_H{} = {:.4} +- {:.4}",
            atom.element,
            atom.p.to_f64(),
            atom.std_error.unwrap_or(0.0)
        );
    }
    println!(
        "  word length of X_tau: slope {:?}, smooth {}",
        mc.word_length.fit.slope, mc.smooth
    );

    for m in [2, 3, 5] {
        let lab = CosetLabeling::new(&g, LabelingKind::LambdaExponentMod(m))?;
        let s = hitting_time_stats(&g, &lab, 50_000, 1, 2)?;
        println!(
            "lambda-mod:{m}: E[tau_H] = {:.3} +- {:.3} (index {})",
            s.tau.estimate, s.tau.std_error, s.index
        );
    }
    Ok(())
}
