//! `sfs`, the command-line client: file operations, administration and CA
//! bootstrap against an SFS server over mutually authenticated TLS.

#![forbid(unsafe_code)]

pub mod args;
pub mod client;
mod commands;
mod render;
pub mod settings;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

pub use settings::{ClientConfig, Environment};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("cannot reach {0}")]
    Connection(String),
    #[error("{reason} (HTTP {status})")]
    Server { status: u16, code: String, reason: String },
    #[error("downloaded bytes hash to {actual} but the server announced {expected}")]
    Integrity { expected: String, actual: String },
    #[error("{0}")]
    Protocol(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Pki(#[from] sfs_core::pki::PkiError),
}

impl CliError {
    pub fn code(&self) -> &str {
        match self {
            CliError::Usage(_) => "USAGE",
            CliError::Config(_) => "CONFIG",
            CliError::Connection(_) => "CONNECTION",
            CliError::Server { code, .. } => code,
            CliError::Integrity { .. } => "INTEGRITY",
            CliError::Protocol(_) => "PROTOCOL",
            CliError::Io(_) => "IO",
            CliError::Pki(e) => e.code(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }

    pub(crate) fn io(context: impl std::fmt::Display, e: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }
}

/// Run with the real process environment and standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env = Environment::from_process();
    run_with(argv, &env, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Parse `argv`, execute one subcommand and return the exit code.
pub fn run_with<I, T>(argv: I, env: &Environment, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let json = cli.json;
    match commands::execute(cli, env, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = if json {
                writeln!(err, "{}", json!({ "error": e.code(), "reason": e.to_string() }))
            } else {
                writeln!(err, "sfs: {}: {e}", e.code())
            };
            e.exit_code()
        }
    }
}
