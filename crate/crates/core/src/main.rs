fn main() {
    std::process::exit(chatfuzz::cli::run(std::env::args_os()));
}
