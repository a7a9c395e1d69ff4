fn main() {
    std::process::exit(stepforge::cli::run(std::env::args_os()));
}
