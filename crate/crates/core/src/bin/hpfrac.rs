fn main() {
    std::process::exit(hpfrac::cli::cli_main(std::env::args_os()));
}
