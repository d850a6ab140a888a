use std::process::ExitCode;

use clap::Parser;
use rwrange_lab::cli::{execute, Cli};

fn main() -> ExitCode {
    execute(Cli::parse())
}
