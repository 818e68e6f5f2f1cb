fn main() {
    std::process::exit(textsketch::cli::run_with_args(std::env::args_os()));
}
