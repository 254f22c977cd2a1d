//! File formats, configuration and pipeline stages for the `tecm` command.

pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod pipeline;
