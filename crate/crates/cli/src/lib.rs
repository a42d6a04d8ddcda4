//! Config-driven experiment runner: executes a method on a dataset and
//! writes a results bundle (structured results, metrics table, rule report,
//! manifest).

pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{Config, Method};
pub use error::{CliError, Result};
pub use report::{inspect, run, sweep};
pub use runner::{run_experiment, Results};
