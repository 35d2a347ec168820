//! Command-line harness around `tradescope-core`: PNG and manifest I/O,
//! super-resolution backends, the external adapter protocol, parallel
//! sweeps and CSV reports.

pub mod adapter;
pub mod backend;
pub mod cli;
pub mod config;
mod error;
pub mod io;
pub mod manifest;
pub mod report;
pub mod runner;

pub use error::{AppError, Result};
pub use tradescope_core as core;
