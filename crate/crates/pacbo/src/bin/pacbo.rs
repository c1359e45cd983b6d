fn main() {
    std::process::exit(pacbo::cli::main_with_args(std::env::args_os()));
}
