fn main() {
    std::process::exit(comp_market_cli::dispatch(std::env::args_os()));
}
