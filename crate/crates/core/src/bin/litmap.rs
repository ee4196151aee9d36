fn main() {
    std::process::exit(litmap::cli::main());
}
