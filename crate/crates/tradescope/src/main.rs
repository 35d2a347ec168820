fn main() {
    std::process::exit(tradescope::cli::run(std::env::args_os()));
}
