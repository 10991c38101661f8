//! Walks on the line with i.i.d. symmetric steps: exit time, big jumps,
//! exit side, occupation time and separated visits, each as a verdict with
//! its measurements, fits and checks.
//!
//!     cargo run --release --example line_lemmas [unit|uniform-K|sym-geometric:Q]

use harmonic_walks::line::{
    max_separated, verify_big_jump, verify_exit_time, verify_green_function, verify_msep,
    verify_occupation_time, LemmaVerdict, LineLemmaConfig, StepDistribution,
};

fn summarize(v: &LemmaVerdict) {
    println!("{:?}: {}", v.lemma, if v.pass { "pass" } else { "FAIL" });
    for c in &v.checks {
        println!(
            "  [{}] {:<40} {:>10.4}  ({})",
            if c.pass { "ok" } else { "!!" },
            c.name,
            c.value,
            c.accept
        );
    }
    for n in &v.notes {
        println!("  note: {n}");
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dist: StepDistribution = std::env::args()
        .nth(1)
        .as_deref()
        .unwrap_or("unit")
        .parse()?;
    let mut cfg = LineLemmaConfig::new(dist);
    cfg.n_samples = 40_000;
    cfg.workers = 2;

    summarize(&verify_exit_time(&cfg)?);
    summarize(&verify_big_jump(&cfg)?);

    let mut green = cfg.clone();
    green.y = 2.0;
    summarize(&verify_green_function(&green)?);

    let mut occ = cfg.clone();
    occ.r = 32.0;
    occ.y = 1.0;
    summarize(&verify_occupation_time(&occ)?);

    summarize(&verify_msep(&cfg)?);

    // the same count on an arbitrary real set
    let pts = [0.2, 0.9, 1.1, 2.05, 2.5, 3.6];
    println!(
        "largest 1-separated subset of {pts:?}: {}",
        max_separated(&pts)
    );
    Ok(())
}
