fn main() {
    std::process::exit(classical_dj::cli::main_entry(std::env::args_os()));
}
