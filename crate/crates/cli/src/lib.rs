//! Command-line front end for `reqcontract`: config loading, output
//! documents and the `solve`, `sweep`, `calibrate` and `verify` commands.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use commands::{run, Cli, Command, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, EXIT_VERIFY_FAILED};

/// Parses `args` (program name first) and runs the command. Usage errors exit
/// with code 1, `--help` and `--version` with 0.
pub fn run_from_args<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, stdout, stderr),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_INPUT
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            }
        }
    }
}
