fn main() {
    std::process::exit(cylns_cli::run_cli(std::env::args_os()));
}
