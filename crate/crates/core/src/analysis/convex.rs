use serde::{Deserialize, Serialize};

use super::slope::convergence_slope;
use crate::compressors::CodecId;
use crate::error::Result;
use crate::federation::{
    local_update_fedmrn, noise_seed, run_rounds, run_training, FedConfig, LocalTrace, LocalWork, LrSchedule,
    NoiseScale, Partition,
};
use crate::numeric::{NoiseDist, Objective, ParamVector, QuadraticProblem, QuadraticSpec};

/// The strongly convex comparison: mask training with signed masks over
/// two-point noise that tracks the learning rate, against plain local SGD,
/// both with the inverse-time schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexSetup {
    pub problem: QuadraticSpec,
    pub clients_per_round: usize,
    pub local_steps: usize,
    pub batch_size: usize,
    pub rounds: usize,
    /// Round index (zero-based) where the slope fit starts.
    pub burn_in: usize,
    /// Per-coordinate gradient bound `G`; measured from the data when
    /// `None`.
    pub grad_bound: Option<f64>,
    pub seed: u64,
}

impl Default for ConvexSetup {
    /// N = 10, K = 5, S = 5, d = 50, 500 rounds, slope over rounds 50–500.
    fn default() -> Self {
        Self {
            problem: QuadraticSpec::default(),
            clients_per_round: 5,
            local_steps: 5,
            batch_size: 4,
            rounds: 500,
            burn_in: 49,
            grad_bound: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexComparison {
    pub grad_bound: f64,
    /// `F(w_t) − F*` after each round.
    pub fedmrn_gaps: Vec<f64>,
    pub fedavg_gaps: Vec<f64>,
    pub fedmrn_slope: f64,
    pub fedavg_slope: f64,
    /// Local-update coordinates that left the reachable interval `|u| ≤ |n|`.
    pub clipped_coordinates: usize,
}

impl ConvexComparison {
    /// Final FedMRN gap over final FedAvg gap.
    pub fn final_gap_ratio(&self) -> f64 {
        self.fedmrn_gaps.last().copied().unwrap_or(f64::NAN) / self.fedavg_gaps.last().copied().unwrap_or(f64::NAN)
    }
}

/// `L · max_j (max_i c_ij − min_i c_ij)` bounds every per-sample gradient
/// coordinate while the iterate stays inside the box spanned by the
/// sample centres.
pub fn box_gradient_bound(problem: &QuadraticProblem) -> f64 {
    let d = problem.spec().dim;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (j, &c) in problem.centres().iter().enumerate() {
        lo[j % d] = lo[j % d].min(c);
        hi[j % d] = hi[j % d].max(c);
    }
    let width = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
    problem.spec().smoothness * width
}

impl ConvexSetup {
    pub fn fed_config(&self, codec: CodecId, grad_bound: f64) -> FedConfig {
        let spec = &self.problem;
        let mut c = FedConfig::with_defaults(codec);
        c.n_clients = spec.n_clients;
        c.clients_per_round = self.clients_per_round;
        c.rounds = self.rounds;
        c.local_work = LocalWork::Steps(self.local_steps);
        c.batch_size = self.batch_size;
        c.lr = LrSchedule::strongly_convex(spec.mu, spec.smoothness, self.local_steps);
        c.noise_dist = NoiseDist::TwoPoint;
        c.noise_scale = NoiseScale::LrTracking { grad_bound };
        c.seed = self.seed;
        c
    }
}

pub fn strongly_convex_comparison(setup: &ConvexSetup) -> Result<ConvexComparison> {
    let problem = QuadraticProblem::generate(setup.problem)?;
    let partition = Partition::from_shards(problem.shards())?;
    let optimum = problem.optimum();
    let initial = ParamVector::zeros(problem.dim());
    let grad_bound = setup.grad_bound.unwrap_or_else(|| box_gradient_bound(&problem));

    let avg_cfg = setup.fed_config(CodecId::None, grad_bound);
    let avg = run_training(&avg_cfg, &problem, &partition, &initial, &problem)?;
    let fedavg_gaps: Vec<f64> = avg.metrics.iter().map(|m| m.eval_loss - optimum).collect();

    let mrn_cfg = setup.fed_config(CodecId::MrnSigned, grad_bound);
    let mut fedmrn_gaps = Vec::with_capacity(setup.rounds);
    let mut clipped = 0usize;
    run_rounds(
        &mrn_cfg,
        &problem,
        &partition,
        &initial,
        |task, global| {
            let mut trace = LocalTrace::default();
            let r = local_update_fedmrn(&problem, global, task, &mrn_cfg, Some(&mut trace))?;
            Ok((r, trace))
        },
        |rec| {
            let spec = mrn_cfg.noise_for_round(rec.round);
            for (&k, t) in rec.selected.iter().zip(rec.extras) {
                let noise = spec.generate(noise_seed(mrn_cfg.seed, rec.round, k), problem.dim());
                for u in t.updates.iter().chain(std::iter::once(&t.final_update)) {
                    clipped += u.iter().zip(noise.iter()).filter(|(a, n)| a.abs() > n.abs()).count();
                }
            }
            fedmrn_gaps.push(problem.objective(rec.next) - optimum);
            Ok(())
        },
    )?;

    Ok(ConvexComparison {
        grad_bound,
        fedmrn_slope: convergence_slope(&fedmrn_gaps, setup.burn_in)?,
        fedavg_slope: convergence_slope(&fedavg_gaps, setup.burn_in)?,
        fedmrn_gaps,
        fedavg_gaps,
        clipped_coordinates: clipped,
    })
}
