use crate::compressors::{
    compress_drive, compress_sign, compress_terngrad, compress_topk, dense_payload_bytes, encode_mask, k_for_fraction,
    CodecId, Payload,
};
use crate::error::{Error, Result};
use crate::masking::{psm_forward, ste_step, stochastic_mask, PmSchedule};
use crate::numeric::{derive_seed, streams, Objective, ParamVector, Prng};

use super::config::FedConfig;

/// What a client sends back.
#[derive(Debug, Clone, PartialEq)]
pub enum Uplink {
    /// Uncompressed update. Accounted at `f32` wire size.
    Dense(ParamVector),
    Compressed(Payload),
}

impl Uplink {
    pub fn dim(&self) -> usize {
        match self {
            Uplink::Dense(u) => u.len(),
            Uplink::Compressed(p) => p.dim,
        }
    }

    pub fn bytes(&self) -> usize {
        match self {
            Uplink::Dense(u) => dense_payload_bytes(u.len()),
            Uplink::Compressed(p) => p.payload_bytes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientReport {
    pub client_id: usize,
    pub n_samples: usize,
    pub uplink: Uplink,
    /// Mini-batch loss at every local step.
    pub local_losses: Vec<f64>,
}

impl ClientReport {
    pub fn mean_loss(&self) -> f64 {
        if self.local_losses.is_empty() {
            return 0.0;
        }
        self.local_losses.iter().sum::<f64>() / self.local_losses.len() as f64
    }
}

/// Identifies one client's work in one round.
#[derive(Debug, Clone, Copy)]
pub struct ClientTask<'a> {
    pub client_id: usize,
    /// Zero-based round index.
    pub round: usize,
    pub shard: &'a [usize],
}

/// Per-step record of a mask-training run, for diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalTrace {
    /// `u` entering each step.
    pub updates: Vec<ParamVector>,
    /// `û` seen by the forward pass at each step.
    pub masked: Vec<ParamVector>,
    pub grad_norms: Vec<f64>,
    pub grad_norms_inf: Vec<f64>,
    pub lrs: Vec<f64>,
    /// Final dense update before the uplink mask is drawn.
    pub final_update: ParamVector,
    /// `noise ⊙ mask` for the transmitted mask, computed client-side.
    pub final_masked: ParamVector,
}

/// Seed of the noise `G(s)` client `client` uses in `round`.
pub fn noise_seed(master: u64, round: usize, client: usize) -> u64 {
    derive_seed(master, &[streams::NOISE, round as u64, client as u64])
}

fn client_stream(master: u64, tag: u64, round: usize, client: usize) -> Prng {
    Prng::from_seed(derive_seed(master, &[tag, round as u64, client as u64]), tag)
}

/// Sequential mini-batches over a fresh seeded permutation of the shard
/// each epoch.
struct Batches<'a> {
    shard: &'a [usize],
    batch_size: usize,
    rng: Prng,
    order: Vec<usize>,
    pos: usize,
}

impl<'a> Batches<'a> {
    fn new(shard: &'a [usize], batch_size: usize, rng: Prng) -> Self {
        Self {
            shard,
            batch_size,
            rng,
            order: Vec::new(),
            pos: 0,
        }
    }

    fn next_batch(&mut self) -> &[usize] {
        if self.pos >= self.order.len() {
            self.order = self.shard.to_vec();
            self.rng.shuffle(&mut self.order);
            self.pos = 0;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let b = &self.order[self.pos..end];
        self.pos = end;
        b
    }
}

fn check_task(global: &[f64], objective: &dyn Objective, task: &ClientTask) -> Result<()> {
    crate::error::ensure_same_len(objective.dim(), global.len())?;
    if task.shard.is_empty() {
        return Err(Error::invalid(format!("client {} has no data", task.client_id)));
    }
    Ok(())
}

/// Plain local SGD from `global`, then the configured post-training codec.
pub fn local_update_fedavg(
    objective: &dyn Objective,
    global: &[f64],
    task: ClientTask,
    config: &FedConfig,
) -> Result<ClientReport> {
    check_task(global, objective, &task)?;
    if config.codec.is_mrn() {
        return Err(Error::invalid("mask codecs train with local_update_fedmrn"));
    }
    let steps = config.local_work.steps_for(task.shard.len(), config.batch_size);
    let mut batches = Batches::new(
        task.shard,
        config.batch_size,
        client_stream(config.seed, streams::BATCH, task.round, task.client_id),
    );
    let mut update = ParamVector::zeros(global.len());
    let mut params = ParamVector::from(global.to_vec());
    let mut losses = Vec::with_capacity(steps);
    for tau in 0..steps {
        let lr = config.lr.at(task.round * steps + tau);
        let (loss, grad) = objective.loss_grad(&params, batches.next_batch());
        losses.push(loss);
        update.axpy(-lr, &grad)?;
        for ((p, g), u) in params.iter_mut().zip(global).zip(update.iter()) {
            *p = g + u;
        }
    }

    let seed = derive_seed(config.seed, &[streams::CODEC, task.round as u64, task.client_id as u64]);
    let mut rng = Prng::from_seed(seed, streams::CODEC);
    let uplink = match config.codec {
        CodecId::None => Uplink::Dense(update),
        CodecId::SignStochastic => Uplink::Compressed(compress_sign(&update, &mut rng)?),
        CodecId::Topk => Uplink::Compressed(compress_topk(
            &update,
            k_for_fraction(update.len(), config.topk_fraction),
        )?),
        CodecId::Terngrad => Uplink::Compressed(compress_terngrad(&update, &mut rng)?),
        CodecId::Drive => Uplink::Compressed(compress_drive(&update, seed)?),
        CodecId::MrnBinary | CodecId::MrnSigned => unreachable!(),
    };
    Ok(ClientReport {
        client_id: task.client_id,
        n_samples: task.shard.len(),
        uplink,
        local_losses: losses,
    })
}

/// Mask training: the update starts at zero, every forward pass sees its
/// progressive stochastic masking, gradients pass straight through, and the
/// final update is masked once more for the uplink.
pub fn local_update_fedmrn(
    objective: &dyn Objective,
    global: &[f64],
    task: ClientTask,
    config: &FedConfig,
    mut trace: Option<&mut LocalTrace>,
) -> Result<ClientReport> {
    check_task(global, objective, &task)?;
    let mode = config
        .mask_mode()
        .ok_or_else(|| Error::invalid(format!("codec {} is not a mask codec", config.codec)))?;
    let d = global.len();
    let steps = config.local_work.steps_for(task.shard.len(), config.batch_size);
    let seed = noise_seed(config.seed, task.round, task.client_id);
    let noise = config.noise_for_round(task.round).generate(seed, d);
    let mut mask_rng = client_stream(config.seed, streams::MASK, task.round, task.client_id);
    let mut batches = Batches::new(
        task.shard,
        config.batch_size,
        client_stream(config.seed, streams::BATCH, task.round, task.client_id),
    );

    let mut u = ParamVector::zeros(d);
    let mut params = ParamVector::zeros(d);
    let mut losses = Vec::with_capacity(steps);
    for tau in 1..=steps {
        let lr = config.lr.at(task.round * steps + tau - 1);
        let fwd = psm_forward(&u, &noise, mode, PmSchedule::new(steps, tau)?, &mut mask_rng)?;
        for ((p, g), m) in params.iter_mut().zip(global).zip(fwd.masked.iter()) {
            *p = g + m;
        }
        let (loss, grad) = objective.loss_grad(&params, batches.next_batch());
        losses.push(loss);
        let next = ste_step(&u, &grad, lr)?;
        if let Some(t) = trace.as_deref_mut() {
            t.updates.push(u.clone());
            t.masked.push(fwd.masked);
            t.grad_norms.push(grad.norm());
            t.grad_norms_inf.push(grad.norm_inf());
            t.lrs.push(lr);
        }
        u = next;
    }

    let mask = stochastic_mask(&u, &noise, mode, &mut mask_rng)?;
    if let Some(t) = trace {
        t.final_masked = mask.apply(&noise)?;
        t.final_update = u;
    }
    Ok(ClientReport {
        client_id: task.client_id,
        n_samples: task.shard.len(),
        uplink: Uplink::Compressed(encode_mask(&mask, seed)),
        local_losses: losses,
    })
}

/// Dispatches on the configured codec.
pub fn local_update(
    objective: &dyn Objective,
    global: &[f64],
    task: ClientTask,
    config: &FedConfig,
) -> Result<ClientReport> {
    if config.codec.is_mrn() {
        local_update_fedmrn(objective, global, task, config, None)
    } else {
        local_update_fedavg(objective, global, task, config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressors::decode_to_update;
    use crate::federation::config::{LocalWork, LrSchedule};
    use crate::numeric::{QuadraticProblem, QuadraticSpec};

    fn problem() -> QuadraticProblem {
        QuadraticProblem::generate(QuadraticSpec {
            n_clients: 2,
            samples_per_client: 8,
            dim: 6,
            ..Default::default()
        })
        .unwrap()
    }

    fn cfg(codec: CodecId) -> FedConfig {
        let mut c = FedConfig::with_defaults(codec);
        c.n_clients = 2;
        c.clients_per_round = 2;
        c.local_work = LocalWork::Steps(1);
        c.batch_size = 8;
        c
    }

    #[test]
    fn one_full_batch_step_is_negative_lr_grad() {
        let p = problem();
        let shard: Vec<usize> = (0..8).collect();
        let global = vec![0.3; 6];
        let task = ClientTask {
            client_id: 0,
            round: 0,
            shard: &shard,
        };
        let r = local_update_fedavg(&p, &global, task, &cfg(CodecId::None)).unwrap();
        let (_, g) = p.loss_grad(&global, &shard);
        match r.uplink {
            // the batch is a permutation of the shard, so only summation order differs
            Uplink::Dense(u) => {
                for (a, b) in u.iter().zip(g.scale(-0.1).iter()) {
                    assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0), "{a} vs {b}");
                }
            }
            _ => panic!("dense expected"),
        }
    }

    #[test]
    fn zero_lr_gives_zero_update() {
        let p = problem();
        let shard: Vec<usize> = (0..8).collect();
        let mut c = cfg(CodecId::None);
        c.local_work = LocalWork::Steps(5);
        c.lr = LrSchedule::Constant(0.0);
        let task = ClientTask {
            client_id: 0,
            round: 0,
            shard: &shard,
        };
        match local_update_fedavg(&p, &[1.0; 6], task, &c).unwrap().uplink {
            Uplink::Dense(u) => assert_eq!(u, ParamVector::zeros(6)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn fedavg_moves_toward_minimiser() {
        let p = problem();
        let shard: Vec<usize> = (0..8).collect();
        let mut c = cfg(CodecId::None);
        c.local_work = LocalWork::Steps(10);
        let global = vec![5.0; 6];
        let task = ClientTask {
            client_id: 0,
            round: 0,
            shard: &shard,
        };
        let Uplink::Dense(u) = local_update_fedavg(&p, &global, task, &c).unwrap().uplink else {
            panic!()
        };
        let after: Vec<f64> = global.iter().zip(u.iter()).map(|(g, u)| g + u).collect();
        assert!(p.loss_grad(&after, &shard).0 < p.loss_grad(&global, &shard).0);
    }

    #[test]
    fn fedmrn_zero_gradient_is_zero_mask() {
        // every sample centred at the global point: gradient vanishes
        let p = QuadraticProblem::generate(QuadraticSpec {
            n_clients: 1,
            samples_per_client: 4,
            dim: 5,
            heterogeneity: 0.0,
            sample_spread: 0.0,
            ..Default::default()
        })
        .unwrap();
        let shard: Vec<usize> = (0..4).collect();
        let mut c = cfg(CodecId::MrnBinary);
        c.local_work = LocalWork::Steps(4);
        let task = ClientTask {
            client_id: 0,
            round: 0,
            shard: &shard,
        };
        let r = local_update_fedmrn(&p, &[0.0; 5], task, &c, None).unwrap();
        let Uplink::Compressed(payload) = r.uplink else {
            panic!()
        };
        assert_eq!(
            decode_to_update(&payload, &c.noise_for_round(0)).unwrap(),
            ParamVector::zeros(5)
        );
    }

    #[test]
    fn fedmrn_support_and_wire_agreement() {
        let p = problem();
        let shard: Vec<usize> = (0..8).collect();
        let mut c = cfg(CodecId::MrnBinary);
        c.local_work = LocalWork::Steps(3);
        c.batch_size = 4;
        let mut trace = LocalTrace::default();
        let task = ClientTask {
            client_id: 1,
            round: 7,
            shard: &shard,
        };
        let r = local_update_fedmrn(&p, &[0.0; 6], task, &c, Some(&mut trace)).unwrap();
        assert_eq!(trace.updates.len(), 3);
        let Uplink::Compressed(payload) = r.uplink else {
            panic!()
        };
        let spec = c.noise_for_round(7);
        let decoded = decode_to_update(&payload, &spec).unwrap();
        assert_eq!(decoded, trace.final_masked);
        let noise = spec.generate(payload.seed, 6);
        for (v, n) in decoded.iter().zip(noise.iter()) {
            assert!(*v == 0.0 || v == n);
        }
    }

    #[test]
    fn rejects_wrong_procedure() {
        let p = problem();
        let shard = [0usize];
        let task = ClientTask {
            client_id: 0,
            round: 0,
            shard: &shard,
        };
        assert!(local_update_fedavg(&p, &[0.0; 6], task, &cfg(CodecId::MrnBinary)).is_err());
        assert!(local_update_fedmrn(&p, &[0.0; 6], task, &cfg(CodecId::None), None).is_err());
        assert!(local_update_fedavg(&p, &[0.0; 5], task, &cfg(CodecId::None)).is_err());
    }
}
