//! Configuration, file formats and subcommands of the `gravinv` tool.

pub mod commands;
pub mod config;
pub mod io;
