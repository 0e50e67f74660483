fn main() {
    std::process::exit(reclab::cli::run(std::env::args_os()));
}
