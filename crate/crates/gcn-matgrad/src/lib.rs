//! File formats, configs and command implementations on top of
//! [`gcn_matgrad_core`].

pub mod commands;
pub mod config;
pub mod io;
pub mod parallel;
pub mod report;

pub use commands::{CliError, Outcome, Source};
