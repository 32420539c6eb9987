fn main() {
    std::process::exit(cryptcc::driver::main(std::env::args().skip(1)));
}
