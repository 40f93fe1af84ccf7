//! Monte-Carlo experiments and the metrics they report.

pub mod capacity;
pub mod decontam;
pub mod metrics;
pub mod phase;
pub mod precoding;
pub mod recover;
pub mod runner;
pub mod sinr;

pub use capacity::{user_capacity_sweep, CapacityParams, CapacityResult, SinrTargets};
pub use metrics::nmse_db;
pub use precoding::{downlink_interference, mrt_precoder, PrecodingScenario};
pub use runner::{run_experiment, ExperimentKind, ExperimentSpec, MetricRecord};
