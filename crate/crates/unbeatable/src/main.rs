fn main() {
    std::process::exit(unbeatable::cli::run(std::env::args()));
}
