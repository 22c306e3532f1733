use std::process::ExitCode;

use clap::Parser;
use graphrank::cli::{run, Cli, EXIT_INVARIANT};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = run(&cli);
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &out.body) {
                eprintln!("{}: {e}", path.display());
                return ExitCode::from(EXIT_INVARIANT as u8);
            }
        }
        None => print!("{}", out.body),
    }
    ExitCode::from(out.code as u8)
}
