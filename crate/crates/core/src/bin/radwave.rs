fn main() {
    std::process::exit(radwave_core::cli::run_cli(std::env::args_os()));
}
