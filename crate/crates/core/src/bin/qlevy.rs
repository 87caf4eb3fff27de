fn main() {
    std::process::exit(qlevy::cli::main_with_args(std::env::args_os()));
}
