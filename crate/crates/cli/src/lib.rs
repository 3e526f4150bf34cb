//! Command-line front end for `dpsa`: TOML-configured sensitivity sweeps and
//! the built-in acceptance suite.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{OutputFormat, RunConfig, RunPlan};
pub use error::CliError;
pub use report::RunSummary;
pub use run::{execute, run, with_threads};
