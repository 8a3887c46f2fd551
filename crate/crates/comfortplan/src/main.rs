fn main() {
    std::process::exit(comfortplan::cli::main_with_args(std::env::args_os()));
}
