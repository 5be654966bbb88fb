fn main() {
    std::process::exit(tdpair::cli::main_with_args(std::env::args_os()));
}
