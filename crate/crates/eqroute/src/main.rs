use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use eqroute::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &outcome.body),
                None => std::io::stdout().lock().write_all(outcome.body.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("eqroute: cannot write output: {e}");
                return ExitCode::from(1);
            }
            if outcome.code != 0 {
                eprintln!("eqroute: verification failed");
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("eqroute: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
