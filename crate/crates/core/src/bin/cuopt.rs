fn main() {
    std::process::exit(cuopt::cli::main_with(std::env::args()));
}
