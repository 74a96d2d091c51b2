//! Command-line driver: `ingest`, `rank`, `augment`, `train`, `eval`, `sweep`
//! and `ablate`, all driven by one run-config file.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::ffi::OsString;

use clap::Parser;

pub use commands::Cli;
pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::CliError;

/// Parses `argv` (program name first), runs the command and returns the exit status.
///
/// Usage errors exit with 2. Runtime failures print one line,
/// `error: <kind>: <message>`, to stderr and exit with 1.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            1
        }
    }
}
