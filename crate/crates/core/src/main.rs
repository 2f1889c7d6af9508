fn main() {
    std::process::exit(catastrophe_ldp::cli::main_with_args(std::env::args_os()));
}
