fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(robust_forward::cli_io::main_with_args(args));
}
