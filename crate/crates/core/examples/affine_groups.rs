//! The built-in groups: words, the (c, lambda, rho) decomposition, word
//! balls, coset labelings and conjugation to a normalized presentation.
//!
//!     cargo run --release --example affine_groups

use harmonic_walks::groups::{
    bs12, growth_constants, lamplighter, Ball, CosetLabeling, LabelingKind, MeasuredGroup, Word,
    DEFAULT_NODE_BUDGET,
};

fn show(g: &MeasuredGroup, words: &[&str]) -> Result<(), Box<dyn std::error::Error>> {
    println!("{g}");
    for w in words {
        let x = w.parse::<Word>()?.evaluate(g)?;
        println!(
            "  {w:<12} = {x:<24} rho = {:<12} log|c| = {}",
            x.rho(),
            x.c_abs()
        );
    }
    let ball = Ball::build(g, 6, DEFAULT_NODE_BUDGET)?;
    let gc = growth_constants(&ball);
    println!("  sphere sizes up to 6: {:?}", ball.sphere_sizes());
    println!(
        "  max rho per unit length {:.4}, max log|c| per unit length {:.4}",
        gc.rho_per_length, gc.log_c_per_length
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = bs12();
    show(&g, &["a^-5", "b a^-2", "a^2 b a^-2", "a b a^-1 b^-1"])?;

    let lab = CosetLabeling::new(&g, LabelingKind::LambdaExponentMod(3))?;
    let x = "a^4 b".parse::<Word>()?.evaluate(&g)?;
    println!(
        "  lambda-mod:3 label of a^4 b: {} (index {})",
        lab.label(&x)?,
        lab.index()
    );

    let ll = lamplighter(3)?;
    show(&ll, &["t^2", "t a t^-1", "t a t^-1 a"])?;

    // x = b a b^-1 has lambda = 2 but c = -1; conjugate so that x is a pure dilation
    let skew = g.conjugated(&"b".parse::<Word>()?.evaluate(&g)?)?;
    let norm = skew.normalize_presentation(2)?;
    println!(
        "normalized: x = {}",
        norm.x_element().expect("set by normalization")
    );
    Ok(())
}
