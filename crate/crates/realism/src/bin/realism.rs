fn main() {
    std::process::exit(realism::cli::main_with(std::env::args_os()));
}
