fn main() {
    std::process::exit(beamctl::cli::run(std::env::args_os()));
}
