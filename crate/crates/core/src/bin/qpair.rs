fn main() {
    std::process::exit(qpair_kraus::cli::main_with_args(std::env::args_os()));
}
