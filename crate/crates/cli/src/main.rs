fn main() {
    std::process::exit(vislog_cli::run());
}
