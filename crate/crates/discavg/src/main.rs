fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(discavg::cli::main(argv));
}
