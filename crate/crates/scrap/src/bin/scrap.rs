fn main() {
    std::process::exit(scrap::cli::main_with_args(std::env::args_os()));
}
