fn main() {
    std::process::exit(stratgraph::cli::cli_main(std::env::args_os()));
}
