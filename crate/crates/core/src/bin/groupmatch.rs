fn main() {
    std::process::exit(groupmatch::cli::run(std::env::args_os()));
}
