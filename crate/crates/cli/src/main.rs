fn main() {
    std::process::exit(qaw_cli::main_with(std::env::args_os()));
}
