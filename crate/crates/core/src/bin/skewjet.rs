fn main() {
    std::process::exit(skewjet::cli::run(std::env::args_os()));
}
