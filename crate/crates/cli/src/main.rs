fn main() {
    std::process::exit(condexp_cli::run(std::env::args_os()));
}
