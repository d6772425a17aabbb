fn main() {
    std::process::exit(gb::cli::run(std::env::args_os()));
}
