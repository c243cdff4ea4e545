fn main() {
    std::process::exit(hubkit::cli::main_with_args(std::env::args_os()));
}
