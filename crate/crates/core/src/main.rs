fn main() {
    std::process::exit(harmonic_walks::cli::run_main(std::env::args_os()));
}
