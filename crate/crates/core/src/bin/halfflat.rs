fn main() {
    std::process::exit(halfflat::cli::main_with_args(std::env::args_os()));
}
