fn main() {
    std::process::exit(hali::cli::run_cli(std::env::args_os()));
}
