use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    ExitCode::from(fosp_cli::run_cli(fosp_cli::Cli::parse()))
}
