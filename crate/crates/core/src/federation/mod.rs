//! Federated orchestration: who holds which data, who trains each round,
//! what they send and how the server combines it.

mod aggregate;
mod config;
mod local;
mod partition;
mod sampling;
mod training;

pub use aggregate::{aggregate, decode_uplink};
pub use config::{
    default_noise_magnitude, FedConfig, LocalWork, LrSchedule, NoiseScale, DEFAULT_BINARY_NOISE, DEFAULT_SIGNED_NOISE,
};
pub use local::{
    local_update, local_update_fedavg, local_update_fedmrn, noise_seed, ClientReport, ClientTask, LocalTrace, Uplink,
};
pub use partition::{partition_by_labels, partition_dirichlet, partition_iid, Partition};
pub use sampling::sample_clients;
pub use training::{
    run_rounds, run_training, run_training_observed, RoundMetrics, RoundObservation, RoundRecord, TrainingRun,
};
