use std::process::ExitCode;

use clap::Parser;
use obsim_cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("obsim: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
