fn main() {
    let code = fedplan::cli::run(std::env::args_os());
    std::process::exit(code);
}
