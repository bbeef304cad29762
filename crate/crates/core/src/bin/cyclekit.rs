fn main() {
    std::process::exit(cyclekit::cli::main_with_args(std::env::args_os()));
}
