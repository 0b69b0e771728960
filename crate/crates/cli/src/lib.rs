//! File formats, run configuration and the `quasi` command line.

pub mod commands;
pub mod config;
pub mod error;
pub mod fsutil;
pub mod pgm;
pub mod pipeline;
pub mod qvol;
pub mod region;

pub use commands::main_with_args;
pub use error::{CliError, CliResult};
