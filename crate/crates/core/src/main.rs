fn main() {
    std::process::exit(randsieve::cli::main_with_args(std::env::args_os()));
}
