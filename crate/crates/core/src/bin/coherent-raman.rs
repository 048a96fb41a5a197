fn main() {
    std::process::exit(coherent_raman::cli::main_entry(std::env::args_os()));
}
