//! Command-line front end for `topowork-core`: subcommands, CSV/JSON output
//! and the trajectory file reader.

pub mod cli;
pub mod error;
pub mod format;

pub use cli::run;
