//! Command-line front end: run configuration, sweep orchestration and
//! report generation on top of `bitinduct`.

pub mod cli;
pub mod config;
pub mod error;
pub mod mock;
pub mod report;
pub mod run;

pub use config::RunConfig;
pub use error::CliError;
pub use report::{emit_plot_data, render_accuracy_table, ReportBundle, RunData};
