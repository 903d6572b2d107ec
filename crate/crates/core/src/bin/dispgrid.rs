fn main() {
    std::process::exit(dispgrid::cli::main_with_args(std::env::args_os()));
}
