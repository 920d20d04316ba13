fn main() {
    std::process::exit(brinkman_rans_cli::cli_main(std::env::args()));
}
