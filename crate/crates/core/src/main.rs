fn main() {
    std::process::exit(mugid::cli::run_cli(std::env::args_os()));
}
