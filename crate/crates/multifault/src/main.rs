use multifault::cli;

fn main() {
    env_logger::init();
    std::process::exit(cli::run(std::env::args_os()));
}
