fn main() {
    std::process::exit(polygauss::cli::run(std::env::args_os()));
}
