fn main() {
    std::process::exit(entq::cli::main_with_args(std::env::args_os()));
}
