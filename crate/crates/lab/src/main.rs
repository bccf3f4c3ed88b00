fn main() {
    std::process::exit(bdlab::cli::run(std::env::args_os()));
}
