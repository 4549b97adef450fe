//! File formats, worker pool and command line around `bglr-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::RunConfig;
pub use error::{Error, Result};
