fn main() {
    std::process::exit(gevreych::cli::run(std::env::args_os()));
}
