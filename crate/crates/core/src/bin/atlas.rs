fn main() {
    std::process::exit(atlas::cli::main());
}
