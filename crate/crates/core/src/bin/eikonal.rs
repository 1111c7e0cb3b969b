fn main() {
    std::process::exit(eikonal_core::cli::run(std::env::args_os()));
}
