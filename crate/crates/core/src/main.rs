fn main() {
    std::process::exit(symforce::cli::main());
}
