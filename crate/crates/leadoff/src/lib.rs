//! File formats, reports and the command-line front end for `leadoff-core`.

pub mod cli;
pub mod coeffs;
pub mod config;
pub mod error;
pub mod kernel_file;
pub mod manifest;
pub mod plays;
pub mod solution_file;
pub mod tables;
pub mod text;

pub use error::{Error, Result};
pub use leadoff_core as core;
