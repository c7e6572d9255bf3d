fn main() {
    std::process::exit(ebcle::cli::main());
}
