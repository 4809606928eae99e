use serde::{Deserialize, Serialize};

use crate::compressors::CodecId;
use crate::error::{Error, Result};
use crate::masking::MaskMode;
use crate::numeric::{NoiseDist, NoiseSpec};

/// Default noise half-width for binary masks.
pub const DEFAULT_BINARY_NOISE: f64 = 1e-2;
/// Default noise half-width for signed masks.
pub const DEFAULT_SIGNED_NOISE: f64 = 5e-3;

/// How much local work a selected client does per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalWork {
    /// Passes over the local shard; a client with `n` samples runs
    /// `epochs · ⌈n / batch⌉` steps.
    Epochs(usize),
    /// Fixed number of mini-batch steps for every client.
    Steps(usize),
}

impl LocalWork {
    pub fn steps_for(self, shard_len: usize, batch_size: usize) -> usize {
        match self {
            LocalWork::Epochs(e) => e * shard_len.div_ceil(batch_size),
            LocalWork::Steps(s) => s,
        }
    }
}

/// Step size as a function of the cumulative local step index `t`
/// (`t = round · S + τ`, zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant(f64),
    /// `η_t = 2 / (μ (γ + t))`.
    InverseTime {
        mu: f64,
        gamma: f64,
    },
}

impl LrSchedule {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            LrSchedule::Constant(lr) => lr,
            LrSchedule::InverseTime { mu, gamma } => 2.0 / (mu * (gamma + t as f64)),
        }
    }

    /// Schedule for a strongly convex objective: `κ = L/μ`,
    /// `γ = max(8κ, S) − 1`.
    pub fn strongly_convex(mu: f64, smoothness: f64, local_steps: usize) -> Self {
        let kappa = smoothness / mu;
        let gamma = (8.0 * kappa).max(local_steps as f64) - 1.0;
        LrSchedule::InverseTime { mu, gamma }
    }
}

/// Noise half-width policy for mask codecs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    Fixed(f64),
    /// `2 · η_{t0} · S · G`, where `t0` is the first local step of the
    /// round. With per-coordinate stochastic gradients bounded by `G`,
    /// every local update stays inside the reachable interval.
    LrTracking {
        grad_bound: f64,
    },
}

/// Federated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FedConfig {
    pub n_clients: usize,
    pub clients_per_round: usize,
    pub rounds: usize,
    pub local_work: LocalWork,
    pub batch_size: usize,
    pub lr: LrSchedule,
    pub codec: CodecId,
    /// Kept fraction for Top-k.
    pub topk_fraction: f64,
    pub noise_dist: NoiseDist,
    pub noise_scale: NoiseScale,
    /// Master seed; every other seed is derived from it.
    pub seed: u64,
}

impl FedConfig {
    /// 100 clients, 10 per round, 10 local epochs, batch 64, 100 rounds,
    /// uniform noise at the mode's default width, Top-k keeping 3%.
    pub fn with_defaults(codec: CodecId) -> Self {
        Self {
            n_clients: 100,
            clients_per_round: 10,
            rounds: 100,
            local_work: LocalWork::Epochs(10),
            batch_size: 64,
            lr: LrSchedule::Constant(0.1),
            codec,
            topk_fraction: 0.03,
            noise_dist: NoiseDist::Uniform,
            noise_scale: NoiseScale::Fixed(default_noise_magnitude(codec)),
            seed: 0,
        }
    }

    pub fn mask_mode(&self) -> Option<MaskMode> {
        match self.codec {
            CodecId::MrnBinary => Some(MaskMode::Binary),
            CodecId::MrnSigned => Some(MaskMode::Signed),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 {
            return Err(Error::config("federation.n_clients", "must be positive"));
        }
        if self.clients_per_round == 0 || self.clients_per_round > self.n_clients {
            return Err(Error::config(
                "federation.clients_per_round",
                format!("must lie in 1..={}", self.n_clients),
            ));
        }
        if self.rounds == 0 {
            return Err(Error::config("federation.rounds", "must be positive"));
        }
        match self.local_work {
            LocalWork::Epochs(0) => return Err(Error::config("federation.local_epochs", "must be positive")),
            LocalWork::Steps(0) => return Err(Error::config("federation.local_steps", "must be positive")),
            _ => {}
        }
        if self.batch_size == 0 {
            return Err(Error::config("federation.batch_size", "must be positive"));
        }
        match self.lr {
            LrSchedule::Constant(lr) if !(lr > 0.0 && lr.is_finite()) => {
                return Err(Error::config("federation.lr", "must be positive"))
            }
            LrSchedule::InverseTime { mu, gamma } if !(mu > 0.0 && gamma > 0.0) => {
                return Err(Error::config(
                    "federation.lr",
                    "inverse-time schedule needs mu > 0 and gamma > 0",
                ))
            }
            LrSchedule::InverseTime { .. } if !matches!(self.local_work, LocalWork::Steps(_)) => {
                return Err(Error::config(
                    "federation.lr",
                    "inverse-time schedule needs fixed local steps",
                ))
            }
            _ => {}
        }
        if !(self.topk_fraction > 0.0 && self.topk_fraction <= 1.0) {
            return Err(Error::config("federation.topk_fraction", "must lie in (0, 1]"));
        }
        match self.noise_scale {
            NoiseScale::Fixed(m) if !(m > 0.0 && m.is_finite()) => {
                return Err(Error::config("noise.magnitude", "must be positive"))
            }
            NoiseScale::LrTracking { grad_bound } if !(grad_bound > 0.0) => {
                return Err(Error::config("noise.grad_bound", "must be positive"))
            }
            NoiseScale::LrTracking { .. } if !matches!(self.local_work, LocalWork::Steps(_)) => {
                return Err(Error::config(
                    "noise.grad_bound",
                    "lr-tracking noise needs fixed local steps",
                ))
            }
            _ => {}
        }
        Ok(())
    }

    /// Noise used by mask codecs in `round` (zero-based).
    pub fn noise_for_round(&self, round: usize) -> NoiseSpec {
        let magnitude = match (self.noise_scale, self.local_work) {
            (NoiseScale::Fixed(m), _) => m,
            (NoiseScale::LrTracking { grad_bound }, LocalWork::Steps(s)) => {
                2.0 * self.lr.at(round * s) * s as f64 * grad_bound
            }
            (NoiseScale::LrTracking { .. }, LocalWork::Epochs(_)) => {
                panic!("lr-tracking noise needs fixed local steps; validate() rejects this")
            }
        };
        NoiseSpec::new(self.noise_dist, magnitude)
    }
}

pub fn default_noise_magnitude(codec: CodecId) -> f64 {
    match codec {
        CodecId::MrnSigned => DEFAULT_SIGNED_NOISE,
        _ => DEFAULT_BINARY_NOISE,
    }
}
