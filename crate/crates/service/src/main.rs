fn main() {
    std::process::exit(conceptnav::cli::run(std::env::args_os()));
}
