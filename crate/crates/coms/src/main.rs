fn main() {
    env_logger::init();
    std::process::exit(coms::cli::run(std::env::args_os()));
}
