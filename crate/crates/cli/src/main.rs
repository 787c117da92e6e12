fn main() {
    std::process::exit(decolab_cli::run(std::env::args_os()));
}
