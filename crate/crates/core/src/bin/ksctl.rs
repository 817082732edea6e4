fn main() {
    std::process::exit(kssim::ksctl::run(std::env::args_os()));
}
