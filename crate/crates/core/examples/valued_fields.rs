//! Exact arithmetic at the three supported places and the absolute values
//! they induce.
//!
//!     cargo run --release --example valued_fields

use harmonic_walks::fields::{Place, ValuedScalar};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let arch = Place::Archimedean;
    let q = ValuedScalar::parse("12/5", arch)?;
    println!("Q, usual |.|:   |{q}| -> log = {}", q.abs_value());
    println!(
        "                |8|   -> log = {}",
        ValuedScalar::from_int(8, arch).abs_value()
    );

    let p3 = Place::padic(3)?;
    let q3 = ValuedScalar::parse("18/5", p3)?;
    // 18 = 2 * 3^2, so |18/5|_3 = 3^-2
    println!("Q, 3-adic:      |{q3}| -> log = {}", q3.abs_value());

    let l2 = Place::laurent(2)?;
    let f = ValuedScalar::parse("x^3 + x + 1", l2)?;
    let g = ValuedScalar::parse("x^-1 + 1", l2)?;
    let h = f.mul(&g)?;
    println!(
        "F_2(x), deg:    ({f}) * ({g}) = {h}, log|.| = {}",
        h.abs_value()
    );
    println!("                1/({g}) = {}", g.inv()?);

    for t in [4u64, 8, 16] {
        println!("                |{f}| vs {t}: {:?}", f.abs_cmp_int(t));
    }

    match Place::laurent(4) {
        Ok(_) => println!("unexpected"),
        Err(e) => println!("laurent:4 rejected: {e}"),
    }
    Ok(())
}
