// SPDX-License-Identifier: Apache-2.0

//! `trajkit`: command-line pipelines over trajkit-core.
//!
//! Exit status is 0 on success, 1 when an input fails validation or a step
//! fails, and 2 on a usage error.

mod commands;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = commands::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
