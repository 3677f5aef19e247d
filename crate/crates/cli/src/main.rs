fn main() {
    std::process::exit(bandit_lan_cli::run(std::env::args_os()));
}
