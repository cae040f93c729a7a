fn main() {
    std::process::exit(pointreg::cli::run(std::env::args_os()));
}
