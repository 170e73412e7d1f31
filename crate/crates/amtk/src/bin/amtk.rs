fn main() {
    std::process::exit(amtk::cli::run());
}
