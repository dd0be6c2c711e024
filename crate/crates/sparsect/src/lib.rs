//! File formats, reports and experiment pipelines on top of `sparsect-core`,
//! plus the `sparsect` command-line tool.

pub mod config;
mod error;
pub mod experiment;
pub mod formats;
pub mod report;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use sparsect_core as core;
