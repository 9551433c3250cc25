//! Library side of the `pns` command: config parsing, the subcommands and
//! exit-code mapping.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{Options, Report};
pub use config::RunConfig;
pub use error::{CliError, Result};
