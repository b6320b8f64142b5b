fn main() {
    let args = std::env::args();
    std::process::exit(srm::cli::run(args));
}
