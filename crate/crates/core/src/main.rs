fn main() {
    std::process::exit(rulebasis::cli::run(std::env::args_os()));
}
