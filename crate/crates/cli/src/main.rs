//! `osc`: validate instances, compute index profiles, run and compare
//! extensions, and sweep the block-parity experiment over Cantor depths.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use osc_core::{Error, ErrorClass};

use args::Cli;

fn exit_code(error: &Error) -> u8 {
    match error.class() {
        ErrorClass::Validation => 1,
        ErrorClass::Precondition => 2,
        ErrorClass::Invariant => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with status 0; usage errors are validation failures.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
