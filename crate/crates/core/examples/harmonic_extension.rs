//! Extending a function from a finite-index subgroup H by
//! x -> E_x[f(X_tau_H)], and checking the extension is harmonic off H.
//!
//!     cargo run --release --example harmonic_extension

use std::sync::Arc;

use harmonic_walks::groups::{bs12, CosetLabeling, LabelingKind, Word};
use harmonic_walks::harmonic::{
    extend_harmonic, harmonicity_residual, ConstantOracle, ExtensionOracle, FunctionOracle,
    RhoOracle,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = Arc::new(bs12());
    let lab = CosetLabeling::new(&g, LabelingKind::LambdaExponentMod(2))?;

    for w in ["a", "a^3 b", "b a^-1"] {
        let x = w.parse::<Word>()?.evaluate(&g)?;
        let e = extend_harmonic(&g, &lab, &RhoOracle, &x, 20_000, 1, 2)?;
        println!(
            "rho|_H extended to {w:<8}: {:+.4} +- {:.4} (rho = {:+.4}, {} return points)",
            e.value,
            e.std_error,
            x.rho().to_f64(),
            e.distinct_returns
        );
    }

    let one: Box<dyn FunctionOracle> = Box::new(ConstantOracle::int(1));
    let x = "a".parse::<Word>()?.evaluate(&g)?;
    println!(
        "constant 1 extended to a: {}",
        extend_harmonic(&g, &lab, one.as_ref(), &x, 1_000, 1, 1)?.value
    );

    let ext = ExtensionOracle {
        group: g.clone(),
        labeling: lab,
        inner: Box::new(RhoOracle),
        n_samples: 20_000,
        seed: 5,
        workers: 2,
    };
    let res = harmonicity_residual(&g, &ext, &x)?;
    println!(
        "{}: residual at a = {:+.4} +- {:.4}, pass {}",
        ext.label(),
        res.residual,
        res.std_error,
        res.pass
    );
    Ok(())
}
