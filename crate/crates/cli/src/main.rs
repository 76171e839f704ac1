fn main() {
    std::process::exit(shefk_cli::run(std::env::args_os()));
}
