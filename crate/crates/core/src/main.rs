fn main() {
    std::process::exit(vi_simsiam::cli::run(std::env::args_os()));
}
