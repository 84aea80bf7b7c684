fn main() {
    std::process::exit(besovlab::cli::run(std::env::args_os()));
}
