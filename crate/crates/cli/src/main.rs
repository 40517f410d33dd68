fn main() {
    std::process::exit(tdx_cli::run(std::env::args_os()));
}
