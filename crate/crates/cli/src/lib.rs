//! Batch front end for the fusion library: file formats (HST1 tensors, SRF
//! CSV, PGM error maps) and the subcommands wiring simulation, solving, and
//! evaluation together. Process exit codes: 0 success, 2 configuration
//! error, 3 I/O or file-format error, 4 solver abort on non-finite values.

use std::fmt;

pub mod args;
pub mod commands;
pub mod hst;
pub mod pgm;
pub mod srf;

use args::{Cli, Command};

/// Everything a subcommand can fail with, tagged by exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
    Solver(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::Solver(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(msg) | Failure::Io(msg) | Failure::Solver(msg) => f.write_str(msg),
        }
    }
}

impl From<hsfuse_core::Error> for Failure {
    fn from(e: hsfuse_core::Error) -> Self {
        match e {
            hsfuse_core::Error::NonFinite { .. } => Failure::Solver(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Fuse(a) => commands::cmd_fuse(a),
        Command::Metrics(a) => commands::cmd_metrics(a),
        Command::Errormap(a) => commands::cmd_errormap(a),
        Command::ImportRaw(a) => commands::cmd_import_raw(a),
    }
}
