fn main() {
    std::process::exit(corrgap_cli::commands::main_with(std::env::args_os()));
}
