fn main() {
    std::process::exit(rakb::cli::run(std::env::args_os()));
}
