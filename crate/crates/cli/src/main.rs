fn main() {
    std::process::exit(gasket_cli::cli::main_with_args(std::env::args_os()));
}
