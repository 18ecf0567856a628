use std::process::ExitCode;

use clap::Parser;
use otaccel_cli::Cli;

fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => ExitCode::from(otaccel_cli::run(cli)),
        Err(e) => {
            let _ = e.print();
            // clap reports usage errors as 2, which here means exhaustion
            ExitCode::from(if e.use_stderr() { 3 } else { 0 })
        }
    }
}
