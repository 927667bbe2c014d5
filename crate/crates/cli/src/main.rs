use std::process::ExitCode;

use clap::Parser;
use qauth_cli::{failure_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(err) => {
            eprintln!("qauth: {err:#}");
            ExitCode::from(failure_code(&err))
        }
    }
}
