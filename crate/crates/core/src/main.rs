use clap::Parser;

use kernsmooth::cli::{error_line, exit_code, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("{}", error_line(&e));
        std::process::exit(exit_code(&e));
    }
}
