//! Command-line front end. Exit codes: 0 success (including a flagged
//! non-convergence), 2 configuration error, 3 data error, 4 numerical failure.

mod args;
mod commands;

use clap::Parser;

use crate::error::{Error, ErrorClass};
use crate::io::RunSummary;

pub use args::{
    merge_config, BenchArgs, Cli, Command, CompleteAlgo, CompleteArgs, DataKind, MetricsArgs, SpectrumKind, SvdAlgo,
    SvdArgs, SynthArgs, SynthKind,
};
pub use commands::{cmd_bench, cmd_complete, cmd_metrics, cmd_svd, cmd_synth, median, render_table, BenchRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err.class() {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Data => EXIT_DATA,
        ErrorClass::Numerical => EXIT_NUMERICAL,
    }
}

pub fn dispatch(cli: &Cli) -> crate::Result<RunSummary> {
    match &cli.command {
        Command::Svd(a) => cmd_svd(a),
        Command::Complete(a) => cmd_complete(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Metrics(a) => cmd_metrics(a),
    }
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main_with_env() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
