fn main() {
    std::process::exit(charground::cli::run(std::env::args_os()));
}
