fn main() {
    std::process::exit(lsq_accel::cli::main_with_args(std::env::args_os()));
}
