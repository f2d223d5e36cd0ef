use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use filtra::cli::Cli;
use filtra::commands;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(report) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(report.stdout.as_bytes());
            let _ = out.flush();
            eprint!("{}", report.stderr);
            ExitCode::from(report.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
