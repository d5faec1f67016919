fn main() {
    std::process::exit(cpcone::cli::cli_main(std::env::args_os()));
}
