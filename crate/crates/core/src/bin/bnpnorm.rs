fn main() {
    std::process::exit(bnpnorm::cli::run(std::env::args_os()));
}
