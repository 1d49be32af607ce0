fn main() {
    std::process::exit(lamina::cli::run(std::env::args_os()));
}
