fn main() {
    std::process::exit(openre::cli::run(std::env::args_os()));
}
