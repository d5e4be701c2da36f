//! Config-driven experiments on top of `cdforge`: Kibble-Zurek sweeps, cubic
//! state preparation, single-point control-field solves and resource counts,
//! written as CSV tables with a JSON metadata header.

pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};
pub use experiments::{run, Report};
pub use table::ResultTable;
