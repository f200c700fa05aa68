//! Command-line front end for the `tvp` binary: config parsing, CSV I/O and run orchestration.

pub mod commands;
pub mod config;
pub mod data;
pub mod output;

pub use commands::RunArgs;
pub use config::Config;
