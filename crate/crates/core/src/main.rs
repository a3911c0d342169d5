fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STPM_LOG", "warn")).init();
    std::process::exit(stpm_core::cli::main_with(std::env::args_os()));
}
