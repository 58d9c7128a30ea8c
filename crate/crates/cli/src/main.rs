use std::process::ExitCode;

use clap::Parser;
use grdpg_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.into_config().and_then(|cfg| grdpg_cli::execute(&cfg)) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
