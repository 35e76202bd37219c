fn main() {
    std::process::exit(rotascope::cli::run(std::env::args_os()));
}
