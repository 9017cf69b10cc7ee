fn main() {
    rugguard_cli::init_logging();
    std::process::exit(rugguard_cli::run(std::env::args_os()));
}
