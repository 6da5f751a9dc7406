fn main() {
    std::process::exit(cosra::cli::run(std::env::args_os()));
}
