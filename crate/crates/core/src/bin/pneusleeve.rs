fn main() {
    std::process::exit(pneusleeve::cli::run(std::env::args_os()));
}
