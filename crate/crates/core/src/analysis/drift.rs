use serde::{Deserialize, Serialize};

use super::masking_error::estimate_q;
use crate::error::{Error, Result};
use crate::federation::{local_update_fedmrn, run_rounds, FedConfig, LocalTrace, LocalWork, Partition};
use crate::numeric::{derive_seed, streams, Objective, ParamVector};

/// Drift at one local step, maximised over clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftStep {
    /// Zero-based round.
    pub round: usize,
    /// One-based local step.
    pub step: usize,
    pub lr: f64,
    /// `max_k ‖w̄_t − x_k^t‖²`.
    pub drift: f64,
    /// `4 (1 + q̂²) η_t² (S − 1)² Ĝ²`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub steps: Vec<DriftStep>,
    /// Largest stochastic gradient norm seen.
    pub g_hat: f64,
    /// Largest masking-error ratio over the dense local updates seen.
    pub q_hat: f64,
    pub local_steps: usize,
}

impl DriftReport {
    pub fn violations(&self) -> usize {
        self.steps.iter().filter(|s| s.drift > s.bound).count()
    }

    /// Largest drift in each round.
    pub fn per_round(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for s in &self.steps {
            if out.len() <= s.round {
                out.resize(s.round + 1, 0.0);
            }
            out[s.round] = out[s.round].max(s.drift);
        }
        out
    }
}

/// Runs mask training with every client participating and measures, at
/// each local step `t`, the squared distance between the average of the
/// clients' dense iterates `w̄_t` and each client's masked forward point
/// `x_k^t`. The constants `Ĝ` and `q̂` are measured on the same run and
/// plugged into the bound afterwards.
///
/// The partition must be balanced, so that `w̄_t` is the plain mean.
pub fn gradient_drift(
    objective: &dyn Objective,
    partition: &Partition,
    config: &FedConfig,
    initial: &ParamVector,
    q_trials: usize,
) -> Result<DriftReport> {
    let mode = config
        .mask_mode()
        .ok_or_else(|| Error::invalid("gradient_drift needs a mask codec"))?;
    if config.clients_per_round != config.n_clients {
        return Err(Error::config(
            "federation.clients_per_round",
            "drift probe needs every client every round",
        ));
    }
    let LocalWork::Steps(s) = config.local_work else {
        return Err(Error::config(
            "federation.local_steps",
            "drift probe needs fixed local steps",
        ));
    };
    let len = partition.shard(0).len();
    if partition.shards().iter().any(|sh| sh.len() != len) {
        return Err(Error::invalid("drift probe needs a balanced partition"));
    }

    let mut raw = Vec::new();
    let mut g_hat = 0.0f64;
    let mut q_hat = 0.0f64;
    run_rounds(
        config,
        objective,
        partition,
        initial,
        |task, global| {
            let mut trace = LocalTrace::default();
            let r = local_update_fedmrn(objective, global, task, config, Some(&mut trace))?;
            Ok((r, trace))
        },
        |rec| {
            let traces: &[LocalTrace] = rec.extras;
            let n = traces.len() as f64;
            for tau in 0..s {
                let dim = rec.previous.len();
                let mut mean = vec![0.0; dim];
                for t in traces {
                    for (m, u) in mean.iter_mut().zip(t.updates[tau].iter()) {
                        *m += u / n;
                    }
                }
                let drift = traces
                    .iter()
                    .map(|t| {
                        t.masked[tau]
                            .iter()
                            .zip(&mean)
                            .map(|(x, w)| (w - x) * (w - x))
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max);
                raw.push((rec.round, tau + 1, traces[0].lrs[tau], drift));
            }
            for t in traces {
                g_hat = t.grad_norms.iter().copied().fold(g_hat, f64::max);
            }
            let samples: Vec<Vec<f64>> = traces
                .iter()
                .flat_map(|t| t.updates.iter().skip(1).chain(std::iter::once(&t.final_update)))
                .map(|u| u.to_vec())
                .collect();
            let seed = derive_seed(config.seed, &[streams::PROBE, rec.round as u64]);
            q_hat = q_hat.max(estimate_q(
                &samples,
                &config.noise_for_round(rec.round),
                mode,
                q_trials,
                seed,
            )?);
            Ok(())
        },
    )?;
    let factor = 4.0 * (1.0 + q_hat * q_hat) * ((s - 1) as f64).powi(2) * g_hat * g_hat;
    let steps = raw
        .into_iter()
        .map(|(round, step, lr, drift)| DriftStep {
            round,
            step,
            lr,
            drift,
            bound: factor * lr * lr,
        })
        .collect();
    Ok(DriftReport {
        steps,
        g_hat,
        q_hat,
        local_steps: s,
    })
}
