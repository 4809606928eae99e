use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::analysis::box_gradient_bound;
use crate::analysis::{
    estimate_q, gradient_drift, strongly_convex_comparison, verify_pm_factor, AnalysisReport, ConvexSetup,
    ConvexSummary, DriftSummary,
};
use crate::compressors::CodecId;
use crate::error::{Error, Result};
use crate::federation::{
    partition_by_labels, partition_dirichlet, partition_iid, run_rounds, run_training_observed, Partition, TrainingRun,
    Uplink,
};
use crate::masking::MaskMode;
use crate::numeric::{
    derive_seed, load_csv, make_synthetic, streams, Dataset, Model, NoiseSpec, ParamVector, Prng, QuadraticProblem,
    SupervisedTask, SyntheticSpec,
};

use super::config::{PartitionScheme, Probe, RunConfig};
use super::metrics::{write_summary, MetricsWriter, SummaryRow};

/// Data, partition and initial model shared by every codec of a run.
pub struct Experiment {
    pub train: Dataset,
    pub eval: Dataset,
    pub partition: Partition,
    pub model: Model,
}

impl Experiment {
    pub fn build(config: &RunConfig) -> Result<Self> {
        let d = &config.dataset;
        let data = match d.source.as_str() {
            "csv" => {
                let path = d
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::config("dataset.path", "missing"))?;
                load_csv(path, d.has_header)?
            }
            _ => make_synthetic(&SyntheticSpec {
                n_samples: d.n_samples,
                n_features: d.n_features,
                n_classes: d.n_classes,
                cluster_spread: d.cluster_spread,
                seed: derive_seed(config.seed, &[streams::DATA]),
            })?,
        };
        let (train, eval) = data.split(d.eval_fraction, derive_seed(config.seed, &[streams::DATA, 1]))?;
        let n = config.federation.n_clients;
        let pseed = derive_seed(config.seed, &[streams::PARTITION]);
        let partition = match config.partition_scheme()? {
            PartitionScheme::Iid => partition_iid(&train, n, pseed)?,
            PartitionScheme::Dirichlet { beta } => partition_dirichlet(&train, n, beta, pseed)?,
            PartitionScheme::Labels { per_client } => partition_by_labels(&train, n, per_client, pseed)?,
        };
        let mut rng = Prng::from_seed(derive_seed(config.seed, &[streams::INIT]), streams::INIT);
        let model = Model::init(config.model_kind()?, train.n_features(), train.n_classes(), &mut rng);
        Ok(Self {
            train,
            eval,
            partition,
            model,
        })
    }

    /// Trains one codec, streaming each round's metrics to `writer`.
    pub fn run_codec<W: std::io::Write>(
        &self,
        config: &RunConfig,
        codec: CodecId,
        writer: Option<&mut MetricsWriter<W>>,
    ) -> Result<TrainingRun> {
        let fed = config.fed_config(codec)?;
        let objective = SupervisedTask::new(&self.model, &self.train);
        let evaluator = SupervisedTask::new(&self.model, &self.eval);
        let mut writer = writer;
        let mut write_error = None;
        let mut run = run_training_observed(
            &fed,
            &objective,
            &self.partition,
            self.model.params(),
            &evaluator,
            |obs| {
                if let Some(w) = writer.as_deref_mut() {
                    let mut m = obs.metrics.clone();
                    if !config.record_timing {
                        m.elapsed_ms = 0;
                    }
                    if let Err(e) = w.emit(&m) {
                        write_error.get_or_insert(e);
                    }
                }
            },
        )?;
        if let Some(e) = write_error {
            return Err(e);
        }
        if !config.record_timing {
            run.metrics.iter_mut().for_each(|m| m.elapsed_ms = 0);
        }
        Ok(run)
    }
}

/// Runs `f` on a pool with `threads` workers, or on the global pool when
/// `threads` is 0.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn metrics_path(dir: &Path, codec: CodecId) -> PathBuf {
    dir.join(format!("metrics_{codec}.csv"))
}

fn train_to_file(config: &RunConfig, exp: &Experiment, codec: CodecId) -> Result<TrainingRun> {
    let file = File::create(metrics_path(&config.output, codec))?;
    let mut writer = MetricsWriter::new(BufWriter::new(file))?;
    exp.run_codec(config, codec, Some(&mut writer))
}

/// Trains the first listed codec and writes its metrics file.
pub fn run_train(config: &RunConfig) -> Result<TrainingRun> {
    config.validate()?;
    let codec = config.codec_ids()?[0];
    with_threads(config.threads, || {
        fs::create_dir_all(&config.output)?;
        let exp = Experiment::build(config)?;
        train_to_file(config, &exp, codec)
    })?
}

/// Trains every listed codec on the same data, partition and seeds, writes
/// one metrics file per codec and `summary.csv`.
///
/// With a learning-rate grid, each codec is trained at every grid value and
/// the value with the best final accuracy (earliest on ties) is kept; only
/// that run's metrics are written.
pub fn run_compare(config: &RunConfig) -> Result<Vec<SummaryRow>> {
    config.validate()?;
    let codecs = config.codec_ids()?;
    with_threads(config.threads, || {
        fs::create_dir_all(&config.output)?;
        let exp = Experiment::build(config)?;
        let mut rows = Vec::with_capacity(codecs.len());
        for &codec in &codecs {
            let lr = best_lr(config, &exp, codec)?;
            let mut chosen = config.clone();
            chosen.federation.lr = lr;
            let run = train_to_file(&chosen, &exp, codec)?;
            rows.push(SummaryRow::from_metrics(codec, lr, &run.metrics));
        }
        write_summary(BufWriter::new(File::create(config.output.join("summary.csv"))?), &rows)?;
        Ok(rows)
    })?
}

fn best_lr(config: &RunConfig, exp: &Experiment, codec: CodecId) -> Result<f64> {
    let grid = &config.federation.lr_grid;
    if grid.is_empty() {
        return Ok(config.federation.lr);
    }
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &lr in grid {
        let mut c = config.clone();
        c.federation.lr = lr;
        let run = exp.run_codec::<std::io::Sink>(&c, codec, None)?;
        let acc = SummaryRow::from_metrics(codec, lr, &run.metrics).final_accuracy;
        if acc > best.0 {
            best = (acc, lr);
        }
    }
    Ok(best.1)
}

/// Dense local updates of one round of plain local training.
fn dense_updates(config: &RunConfig, exp: &Experiment) -> Result<Vec<Vec<f64>>> {
    let mut fed = config.fed_config(CodecId::None)?;
    fed.rounds = 1;
    let objective = SupervisedTask::new(&exp.model, &exp.train);
    let mut updates = Vec::new();
    run_rounds(
        &fed,
        &objective,
        &exp.partition,
        exp.model.params(),
        |task, global| crate::federation::local_update_fedavg(&objective, global, task, &fed).map(|r| (r, ())),
        |rec| {
            for r in rec.reports {
                if let Uplink::Dense(u) = &r.uplink {
                    updates.push(u.to_vec());
                }
            }
            Ok(())
        },
    )?;
    Ok(updates)
}

fn probe_mask_codec(config: &RunConfig) -> Result<CodecId> {
    Ok(config
        .codec_ids()?
        .into_iter()
        .find(|c| c.is_mrn())
        .unwrap_or(CodecId::MrnBinary))
}

/// Runs the selected probes and writes `analysis.json`.
pub fn run_probe(config: &RunConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let probes = config.probes()?;
    let p = &config.probe;
    let seed = derive_seed(config.seed, &[streams::PROBE]);
    let report = with_threads(config.threads, || -> Result<AnalysisReport> {
        fs::create_dir_all(&config.output)?;
        let mut report = AnalysisReport::default();
        if probes.contains(&Probe::Q) {
            let exp = Experiment::build(config)?;
            let codec = probe_mask_codec(config)?;
            let fed = config.fed_config(codec)?;
            let mode = fed.mask_mode().unwrap_or(MaskMode::Binary);
            let updates = dense_updates(config, &exp)?;
            report.q_hat = Some(estimate_q(&updates, &fed.noise_for_round(0), mode, p.q_trials, seed)?);
        }
        if probes.contains(&Probe::PmFactor) {
            let fed = config.fed_config(CodecId::MrnSigned)?;
            let noise: NoiseSpec = fed.noise_for_round(0);
            let check = verify_pm_factor(p.pm_dim, p.pm_steps, &noise, MaskMode::Signed, p.trials, seed)?;
            report.pm_factor_hat = Some(check.empirical);
            report.pm_check = Some(check);
        }
        if probes.contains(&Probe::Slope) {
            let setup = ConvexSetup {
                rounds: p.slope_rounds,
                burn_in: (p.slope_rounds / 10).min(49),
                seed: config.seed,
                ..Default::default()
            };
            let c = strongly_convex_comparison(&setup)?;
            report.slope_hat = Some(c.fedmrn_slope);
            report.convex = Some(ConvexSummary::from(&c));
        }
        if probes.contains(&Probe::Drift) {
            let setup = ConvexSetup {
                clients_per_round: ConvexSetup::default().problem.n_clients,
                local_steps: p.drift_steps,
                rounds: p.drift_rounds,
                seed: config.seed,
                ..Default::default()
            };
            let problem = QuadraticProblem::generate(setup.problem)?;
            let partition = Partition::from_shards(problem.shards())?;
            let fed = setup.fed_config(CodecId::MrnBinary, box_gradient_bound(&problem));
            let initial = ParamVector::zeros(setup.problem.dim);
            let d = gradient_drift(&problem, &partition, &fed, &initial, p.q_trials)?;
            report.drift_per_round = d.per_round();
            report.drift = Some(DriftSummary::from(&d));
        }
        Ok(report)
    })??;
    report.validate()?;
    fs::write(config.output.join("analysis.json"), report.to_json()?)?;
    Ok(report)
}

/// Per-client shard sizes and label counts as CSV text.
pub fn partition_inspect(config: &RunConfig) -> Result<String> {
    config.validate()?;
    let exp = Experiment::build(config)?;
    let classes = exp.train.n_classes();
    let mut out = String::from("client,samples,weight");
    for c in 0..classes {
        out.push_str(&format!(",label_{c}"));
    }
    out.push('\n');
    for (k, shard) in exp.partition.shards().iter().enumerate() {
        out.push_str(&format!("{k},{},{}", shard.len(), exp.partition.weights()[k]));
        for count in exp.train.label_histogram(shard) {
            out.push_str(&format!(",{count}"));
        }
        out.push('\n');
    }
    Ok(out)
}
