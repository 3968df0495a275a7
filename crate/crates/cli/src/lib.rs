//! Command-line front end of the fxstats toolkit.
//!
//! Every subcommand is translated into a [`config::RunConfig`] and executed
//! by [`run::execute`]; the resolved configuration is written next to the
//! results so that `fxstats pipeline --config out/config.toml` repeats the
//! run.

pub mod args;
pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;

use clap::Parser;

use crate::args::Cli;

/// Runs the command line `args` (program name first) and returns the exit
/// code: 0 on success, 2 for usage errors, 1 for everything else.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = cli.command.into_config().and_then(|cfg| run::execute(&cfg, &cli.out));
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("fxstats: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}
