fn main() {
    std::process::exit(mvc_triads::demos::cli::run(std::env::args_os()));
}
