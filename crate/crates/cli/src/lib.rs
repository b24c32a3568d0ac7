//! Library side of the `dpmkit` command-line tool.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use commands::{cmd_curate, cmd_eval, cmd_export, cmd_generate, cmd_query, cmd_stats, Report};
pub use config::Config;
pub use error::CliError;
