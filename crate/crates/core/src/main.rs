fn main() {
    std::process::exit(mlrate::cli::run(std::env::args_os()));
}
