use std::process::ExitCode;

use clap::Parser;
use seqrules_cli::{run, Cli, Divergence, EXIT_DIVERGENCE};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<Divergence>().is_some() {
                ExitCode::from(EXIT_DIVERGENCE as u8)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
