fn main() {
    std::process::exit(geovid::cli::run_cli(std::env::args_os()));
}
