//! File formats, experiment sweeps and the command-line front end for
//! [`maskdict`].
//!
//! * [`dataset_file`]: the binary dataset container,
//! * [`config`]: JSON configuration types and sweep presets,
//! * [`sweep`]: parallel multi-seed sweeps with CSV and aggregate output,
//! * [`commands`]: the work behind each subcommand of the `maskdict` binary.

pub mod commands;
pub mod config;
pub mod dataset_file;
pub mod error;
pub mod sweep;

pub use error::{CliError, CliResult};
