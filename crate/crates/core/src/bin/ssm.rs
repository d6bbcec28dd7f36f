fn main() {
    std::process::exit(ssm_colorings::cli::main_with_args(std::env::args_os()));
}
