fn main() {
    std::process::exit(saw_quench::cli::run(std::env::args_os()));
}
