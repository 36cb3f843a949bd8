//! Files, configuration and the experiment pipeline around `holo-core`.

pub mod config;
pub mod error;
pub mod holof64;
pub mod pgm;
pub mod pipeline;
pub mod report;
pub mod selftest;
pub mod units;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
