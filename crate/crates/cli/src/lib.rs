//! Config-driven runs of the structure, variation, spectrum and deformation
//! checks, reported as JSON records.

pub mod config;
pub mod report;
pub mod run;

pub use config::{Command, ConfigError, RunConfig};
pub use report::{Record, RunReport};
pub use run::run;
