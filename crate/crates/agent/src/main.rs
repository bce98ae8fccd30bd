fn main() {
    env_logger::init();
    std::process::exit(kidsize_agent::cli::main_with_args(std::env::args_os()));
}
