fn main() {
    std::process::exit(tripleflow::cli::cli_main(std::env::args_os()));
}
