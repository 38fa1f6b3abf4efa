fn main() {
    std::process::exit(relkernel_cli::main_with(std::env::args_os()));
}
