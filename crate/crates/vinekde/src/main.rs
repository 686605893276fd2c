fn main() {
    std::process::exit(vinekde::cli::run(std::env::args_os()));
}
