fn main() {
    std::process::exit(quasi_cli::main_with_args(std::env::args_os()));
}
