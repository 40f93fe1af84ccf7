fn main() {
    std::process::exit(sparse_csi::cli::main_with_args(std::env::args_os()));
}
