fn main() {
    std::process::exit(inertia_market::cli::run(std::env::args_os()));
}
