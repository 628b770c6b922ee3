//! File formats, parallel simulation and the command-line front end for `twotime-core`.

pub mod cli;
pub mod document;
pub mod error;
pub mod parallel;

pub use document::{parse_document, serialize, to_value, Document, Kind};
pub use error::CliError;
