fn main() {
    std::process::exit(mrfm_detect::cli::run_command(std::env::args_os()));
}
