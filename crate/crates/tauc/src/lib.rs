//! Scenario runner, CSV formats, reproducible artifact bundles and the
//! `tauc` command-line front end built on `tauc-core`.

pub mod bundle;
pub mod canned;
pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod parallel;
pub mod scenario;

pub use error::{Result, TaucError};
