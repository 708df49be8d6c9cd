fn main() {
    std::process::exit(popsplit::harness::cli::main_with_args(std::env::args_os()));
}
