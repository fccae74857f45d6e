//! Library side of the `nandpuf` command-line tool: config and manifest
//! formats, the trace log, signature file I/O, and the subcommand
//! implementations.

pub mod cli;
pub mod config_file;
pub mod files;
pub mod manifest;
pub mod run;
pub mod trace;

pub use cli::{dispatch, Cli, Command};
pub use config_file::{parse_config, ConfigError, RunConfig};
pub use files::{
    signature_from_bytes, signature_to_bytes, stable_map_from_bytes, stable_map_to_bytes,
    FileFormatError,
};
pub use manifest::RunManifest;
pub use run::{compare_report, fit_report, plot, replay, run_experiment, CliError};
pub use trace::{parse_trace, write_trace, TraceParseError, TraceRecord};
