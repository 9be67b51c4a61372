fn main() {
    std::process::exit(pcrecon_cli::run(std::env::args_os()));
}
