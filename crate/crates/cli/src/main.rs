fn main() {
    std::process::exit(oversmooth_cli::run_cli(std::env::args_os()));
}
