//! Config-driven experiment runner behind the `fedmrn` binary.
//!
//! A run is described by a TOML file (see `RunConfig`); `--set key=value`
//! overrides any key, including nested ones such as `federation.rounds`.
//! Metrics are written as `metrics_<codec>.csv` with the columns in
//! [`METRICS_HEADER`], one row per round.

mod config;
mod metrics;
mod run;

pub use config::{
    parse_config, parse_config_str, DatasetConfig, FederationConfig, ModelConfig, NoiseConfig, PartitionConfig,
    PartitionScheme, Probe, ProbeConfig, RunConfig,
};
pub use metrics::{read_metrics, write_summary, MetricsWriter, SummaryRow, METRICS_HEADER, SUMMARY_HEADER};
pub use run::{metrics_path, partition_inspect, run_compare, run_probe, run_train, with_threads, Experiment};

use crate::error::Error;

/// Process exit code for an error: 1 for configuration problems, 2 for
/// everything that went wrong while running.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => 1,
        _ => 2,
    }
}
