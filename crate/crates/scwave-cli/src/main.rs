fn main() {
    std::process::exit(scwave_cli::run(std::env::args_os()));
}
