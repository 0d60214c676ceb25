use std::process::ExitCode;

use clap::Parser;
use graphvec::cli::{run, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    let result = args.into_config().and_then(|config| run(&config));
    match result {
        Ok(out) => {
            print!("{}", out.report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("graphvec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
