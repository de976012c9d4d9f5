fn main() {
    std::process::exit(biaslin::cli::run());
}
