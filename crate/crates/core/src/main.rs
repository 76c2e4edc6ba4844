fn main() {
    std::process::exit(nevdyn::cli::run(std::env::args_os()));
}
