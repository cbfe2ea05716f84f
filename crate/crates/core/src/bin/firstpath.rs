fn main() {
    std::process::exit(firstpath::cli::main_with_args(std::env::args_os()));
}
