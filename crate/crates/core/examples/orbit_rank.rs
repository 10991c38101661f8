//! Linear independence of conjugated copies of f_r: the evaluation matrix
//! at y_n^-1 y_m x^-j and the numerical rank of its Gram matrix.
//!
//!     cargo run --release --example orbit_rank [samples]

use std::sync::Arc;

use harmonic_walks::groups::bs12;
use harmonic_walks::harmonic::{orbit_independence, EstimateCache, FSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args().nth(1).map_or(Ok(5_000), |s| s.parse())?;
    let g = Arc::new(bs12());
    let s = FSettings::new(64.0, n, 3).with_workers(2);
    let rep = orbit_independence(&g, 3, 8, &s, &EstimateCache::default())?;
    println!(
        "N = {}, |lambda^N|(|lambda^N| - 1)|c(z)| = {}",
        rep.conjugation, rep.separation_bound
    );
    for (i, y) in rep.y.iter().enumerate() {
        println!("y_{} = {y}", i + 1);
    }
    for (n, rows) in rep.values.iter().enumerate() {
        for (m, row) in rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:6.2}")).collect();
            println!("n={} m={}: {}", n + 1, m + 1, cells.join(" "));
        }
    }
    println!(
        "off-diagonal points all have |c| >= bound: {}",
        rep.off_diagonal_c_at_bound
    );
    println!(
        "singular values {:?}, rank {}",
        rep.singular_values, rep.rank
    );
    Ok(())
}
