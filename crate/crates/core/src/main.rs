fn main() {
    std::process::exit(curveforge::cli::run(std::env::args_os()));
}
