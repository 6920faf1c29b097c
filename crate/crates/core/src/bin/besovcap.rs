fn main() {
    std::process::exit(besovcap::cli::main_with_args(std::env::args_os()));
}
