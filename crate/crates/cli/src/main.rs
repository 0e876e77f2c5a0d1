fn main() {
    std::process::exit(pnbm_cli::run(std::env::args_os()));
}
