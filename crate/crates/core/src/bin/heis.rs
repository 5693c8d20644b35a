fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(heis::cli::run(&argv));
}
