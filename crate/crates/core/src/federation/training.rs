use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compressors::CodecId;
use crate::error::{ensure_same_len, Error, Result};
use crate::numeric::{derive_seed, streams, Evaluator, Objective, ParamVector};

use super::aggregate::aggregate;
use super::config::FedConfig;
use super::local::{local_update, ClientReport, ClientTask};
use super::partition::Partition;
use super::sampling::sample_clients;

/// One row of the metrics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    /// One-based round index.
    pub round: usize,
    pub codec: CodecId,
    /// Weighted mean of the selected clients' mean local mini-batch loss.
    pub train_loss: f64,
    pub eval_loss: f64,
    pub eval_accuracy: f64,
    pub uplink_bytes: u64,
    pub elapsed_ms: u64,
}

/// What the observer sees after each round.
pub struct RoundObservation<'a> {
    /// Zero-based round index.
    pub round: usize,
    pub selected: &'a [usize],
    pub reports: &'a [ClientReport],
    pub params: &'a ParamVector,
    pub metrics: &'a RoundMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub metrics: Vec<RoundMetrics>,
    pub final_params: ParamVector,
}

pub fn run_training(
    config: &FedConfig,
    objective: &dyn Objective,
    partition: &Partition,
    initial: &ParamVector,
    evaluator: &dyn Evaluator,
) -> Result<TrainingRun> {
    run_training_observed(config, objective, partition, initial, evaluator, |_| {})
}

/// Runs `config.rounds` rounds: sample, broadcast, train locally in
/// parallel, aggregate, evaluate. Results do not depend on the number of
/// worker threads.
pub fn run_training_observed<F>(
    config: &FedConfig,
    objective: &dyn Objective,
    partition: &Partition,
    initial: &ParamVector,
    evaluator: &dyn Evaluator,
    mut observer: F,
) -> Result<TrainingRun>
where
    F: FnMut(RoundObservation<'_>),
{
    let mut metrics = Vec::with_capacity(config.rounds);
    let final_params = run_rounds(
        config,
        objective,
        partition,
        initial,
        |task, global| local_update(objective, global, task, config).map(|r| (r, ())),
        |round| {
            let eval = evaluator.evaluate(round.next);
            let train_loss = round
                .reports
                .iter()
                .zip(round.weights)
                .map(|(r, w)| w * r.mean_loss())
                .sum();
            let m = RoundMetrics {
                round: round.round + 1,
                codec: config.codec,
                train_loss,
                eval_loss: eval.loss,
                eval_accuracy: eval.accuracy,
                uplink_bytes: round.reports.iter().map(|r| r.uplink.bytes() as u64).sum(),
                elapsed_ms: round.started.elapsed().as_millis() as u64,
            };
            observer(RoundObservation {
                round: round.round,
                selected: round.selected,
                reports: round.reports,
                params: round.next,
                metrics: &m,
            });
            metrics.push(m);
            Ok(())
        },
    )?;
    Ok(TrainingRun { metrics, final_params })
}

/// Everything known about one finished round.
pub struct RoundRecord<'a, X> {
    /// Zero-based round index.
    pub round: usize,
    pub started: Instant,
    pub selected: &'a [usize],
    pub reports: &'a [ClientReport],
    /// Per-client extras returned by the local procedure.
    pub extras: &'a [X],
    /// Aggregation weights, aligned with `selected`.
    pub weights: &'a [f64],
    pub previous: &'a ParamVector,
    pub next: &'a ParamVector,
}

/// The round loop shared by training and the diagnostic probes. `client`
/// runs one local procedure from the broadcast parameters.
pub fn run_rounds<X, C, F>(
    config: &FedConfig,
    objective: &dyn Objective,
    partition: &Partition,
    initial: &ParamVector,
    client: C,
    mut after_round: F,
) -> Result<ParamVector>
where
    X: Send,
    C: Fn(ClientTask<'_>, &[f64]) -> Result<(ClientReport, X)> + Sync,
    F: FnMut(RoundRecord<'_, X>) -> Result<()>,
{
    config.validate()?;
    ensure_same_len(objective.dim(), initial.len())?;
    if partition.n_clients() != config.n_clients {
        return Err(Error::config(
            "federation.n_clients",
            format!(
                "partition has {} clients, config says {}",
                partition.n_clients(),
                config.n_clients
            ),
        ));
    }
    let sampling_seed = derive_seed(config.seed, &[streams::SAMPLING]);
    let mut params = initial.clone();
    for round in 0..config.rounds {
        let started = Instant::now();
        let selected = sample_clients(config.n_clients, config.clients_per_round, round, sampling_seed)?;
        let global = params.as_slice();
        let (reports, extras): (Vec<_>, Vec<_>) = selected
            .par_iter()
            .map(|&k| {
                let task = ClientTask {
                    client_id: k,
                    round,
                    shard: partition.shard(k),
                };
                client(task, global)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let weights = partition.selection_weights(&selected);
        let noise = config.noise_for_round(round);
        let next = aggregate(&params, &reports, &weights, Some(&noise))?;
        if !next.is_finite() {
            return Err(Error::invalid(format!(
                "global parameters diverged in round {}",
                round + 1
            )));
        }
        after_round(RoundRecord {
            round,
            started,
            selected: &selected,
            reports: &reports,
            extras: &extras,
            weights: &weights,
            previous: &params,
            next: &next,
        })?;
        params = next;
    }
    Ok(params)
}
