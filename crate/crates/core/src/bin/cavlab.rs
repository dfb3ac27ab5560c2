fn main() {
    std::process::exit(cavlab::cli::run());
}
