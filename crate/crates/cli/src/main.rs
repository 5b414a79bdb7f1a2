//! `pivotscope` command-line driver. Each subcommand reads a corpus or frame,
//! runs one engine operation and writes tab-separated tables plus a
//! `manifest.json` into the output directory.

mod args;
mod commands;
mod manifest;

use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use clap::Parser;
use pivotscope::par;

use crate::args::Cli;

/// Failure that is not the user's fault: unwritable outputs and the like.
/// Exits with status 2.
#[derive(Debug)]
pub struct Internal(pub String);

impl fmt::Display for Internal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Internal {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| match cli.threads {
        Some(n) => par::with_threads(n, || commands::run(&cli.command)),
        None => commands::run(&cli.command),
    }));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<Internal>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
        Err(_) => ExitCode::from(2),
    }
}
