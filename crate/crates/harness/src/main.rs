fn main() {
    std::process::exit(ma_harness::cli::cli_main(std::env::args_os()));
}
