//! Scenario runner, CSV logging and metrics.

pub mod log;
pub mod metrics;
pub mod runner;
pub mod scenario;

pub use log::{read_log, write_log, LogRecord, HEADER};
pub use metrics::{compute_metrics, monotonic_violation_fraction, Metrics};
pub use runner::{run_scenario, RunOutput};
pub use scenario::{ControllerKind, Maneuver, Scenario};
