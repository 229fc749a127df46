//! Command-line front end for `toroskew`: CSV ingestion, fitting and model
//! comparison reports, sampling, density grids and shape summaries.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod output;
pub mod report;

pub use commands::run;
pub use config::{Cli, Command, RunConfig};
pub use dataset::{ingest_csv, Dataset, Unit};
pub use error::CliError;
