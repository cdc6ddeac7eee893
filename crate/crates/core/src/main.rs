fn main() {
    std::process::exit(gsrelight_core::cli::run(std::env::args_os()));
}
