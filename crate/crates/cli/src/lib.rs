//! Library side of the `hdadbin` command, so tests can drive it in-process.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;

use clap::Parser;

pub use crate::args::Cli;
pub use crate::error::CliError;

/// Parses `argv`, runs the subcommand on a pool of the requested size and
/// returns the process exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::code::USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hdadbin: error: {e}");
            e.code
        }
    }
}
