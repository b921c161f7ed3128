fn main() {
    std::process::exit(bobtrack::cli::main_with_args(std::env::args_os()));
}
