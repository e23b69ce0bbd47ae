fn main() {
    std::process::exit(imex_dimsim::cli::run(std::env::args_os()));
}
