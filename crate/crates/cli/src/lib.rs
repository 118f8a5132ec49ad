//! Monte Carlo harness: experiment configuration, drivers, statistics and
//! reports behind the `polya` command-line tool.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod stats;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};
pub use report::ExperimentReport;
