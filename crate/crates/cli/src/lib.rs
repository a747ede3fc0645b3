//! Command-line front end: configuration, table cache, sweeps, histograms and
//! the identity suite.

pub mod app;
pub mod cache;
pub mod config;
pub mod error;
pub mod histogram;
pub mod suite;
pub mod sweep;

pub use error::{CliError, Result};
