fn main() {
    std::process::exit(ggl::cli::run(std::env::args_os()));
}
