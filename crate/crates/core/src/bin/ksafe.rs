fn main() {
    std::process::exit(ksafe::cli::main_with_args(std::env::args_os()));
}
