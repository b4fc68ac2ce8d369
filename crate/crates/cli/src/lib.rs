//! File formats, reports and the command-line front end for
//! `usd-embed-core`.

pub mod app;
pub mod commands;
pub mod error;
pub mod parallel;
pub mod problem;
pub mod report;

pub use error::CliError;
pub use report::ReportFile;
