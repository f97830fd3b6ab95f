fn main() {
    std::process::exit(nasbo::cli::run(std::env::args_os()));
}
