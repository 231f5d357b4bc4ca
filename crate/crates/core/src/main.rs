fn main() {
    std::process::exit(hyperver::cli::run());
}
