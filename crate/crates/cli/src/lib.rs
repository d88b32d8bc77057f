//! Command-line front end: `run` searches for features and writes the
//! transformed table with its provenance, `evaluate` scores a table by
//! cross-validation, `report` summarizes a finished run, and `synth` writes a
//! synthetic table for experiments.

mod args;
mod commands;
mod manifest;
mod output;

use std::ffi::OsString;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

pub use args::{Cli, Command, EvaluateArgs, ReportArgs, RunArgs, SynthArgs};
pub use manifest::{RunManifest, MANIFEST_FILE};

/// Environment variable supplying the default output directory of `run`.
pub const OUT_DIR_ENV: &str = "DUALFEAT_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] dualfeat::Error),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {path}: {message}")]
    Manifest { path: String, message: String },
}

impl CliError {
    /// 1 usage or configuration, 2 data or schema, 3 runtime.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_data_error() => 2,
            CliError::Core(dualfeat::Error::Config(_) | dualfeat::Error::MetricTaskMismatch(_)) => {
                1
            }
            CliError::Manifest { .. } => 2,
            CliError::Core(_) | CliError::Write { .. } => 3,
        }
    }
}

/// Parses `args` and runs the command, writing results to `out` and
/// diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match commands::dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn main_exit() -> ExitCode {
    let code = run_cli(
        std::env::args_os(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    ExitCode::from(code)
}
