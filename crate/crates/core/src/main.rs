fn main() {
    let code = souvlaki::cli::run(std::env::args_os());
    std::process::exit(code);
}
