fn main() {
    std::process::exit(mmcov_cli::run_with(std::env::args_os(), std::env::vars()));
}
