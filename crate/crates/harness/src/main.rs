fn main() {
    std::process::exit(echelon_harness::cli::run(std::env::args_os()));
}
