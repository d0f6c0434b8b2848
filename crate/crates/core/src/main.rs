use clap::Parser;
use spreadsim::cli::{error_json, execute, exit_code, Cli};

fn main() {
    if let Err(e) = execute(Cli::parse()) {
        eprintln!("{}", error_json(&e));
        std::process::exit(exit_code(&e));
    }
}
