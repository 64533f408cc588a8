fn main() {
    std::process::exit(funcmapper::cli::run(std::env::args_os()));
}
