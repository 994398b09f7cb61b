fn main() {
    std::process::exit(locanon::cli::run(std::env::args_os()));
}
