fn main() {
    std::process::exit(stageccd_cli::run(std::env::args_os()));
}
