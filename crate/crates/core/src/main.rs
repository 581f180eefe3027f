fn main() {
    let code = ppp_interference::cli::run(std::env::args_os());
    std::process::exit(code);
}
