//! The CLI pipeline as a library call: parse arguments into a validated
//! config, run it, and render the JSON or CSV report.
//!
//!     cargo run --release --example experiment_reports

use harmonic_walks::cli::{parse_cli, run_experiment, Format};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = parse_cli([
        "harmonic-walks",
        "hitting",
        "exact",
        "--group",
        "zline",
        "--labeling",
        "parity",
    ])?;
    let report = run_experiment(&cfg)?;
    print!("{}", report.render(Format::Json)?);

    let cfg = parse_cli([
        "harmonic-walks",
        "f-estimate",
        "--point",
        "a^-3",
        "--r",
        "32",
        "--samples",
        "20000",
    ])?;
    let report = run_experiment(&cfg)?;
    print!("{}", report.render(Format::Csv)?);
    println!("exit code {}", report.exit_code());

    for bad in [
        ["f-estimate", "--group", "lamplighter:6"],
        ["f-estimate", "--point", "a^^"],
    ] {
        let err = parse_cli(std::iter::once("harmonic-walks").chain(bad)).unwrap_err();
        println!("{bad:?}: {err} (exit {})", err.exit_code());
    }
    Ok(())
}
