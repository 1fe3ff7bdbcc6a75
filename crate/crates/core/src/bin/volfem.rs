fn main() {
    std::process::exit(volfem::cli::main_with(std::env::args_os()));
}
