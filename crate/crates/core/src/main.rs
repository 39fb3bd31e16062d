fn main() {
    std::process::exit(bosonic_limits::cli::main_with_args(std::env::args_os()));
}
