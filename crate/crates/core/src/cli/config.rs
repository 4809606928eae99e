use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compressors::CodecId;
use crate::error::{Error, Result};
use crate::federation::{default_noise_magnitude, FedConfig, LocalWork, LrSchedule, NoiseScale};
use crate::numeric::{ModelKind, NoiseDist};

/// Full run description, as read from a TOML file.
///
/// Every section and key is optional; omitted values take the defaults
/// below (100 clients, 10 per round, 10 local epochs, batch 64, 100 rounds,
/// uniform noise of half-width 1e-2 for binary and 5e-3 for signed masks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every other seed is derived from it.
    pub seed: u64,
    /// Output directory for metrics and reports.
    pub output: PathBuf,
    /// Codec names (aliases such as `fedavg`, `fedmrn`, `fedmrns`, `sign`
    /// are accepted).
    pub codecs: Vec<String>,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    /// Write wall-clock time into the metrics. Off by default so metric
    /// files are byte-reproducible.
    pub record_timing: bool,
    pub dataset: DatasetConfig,
    pub partition: PartitionConfig,
    pub model: ModelConfig,
    pub federation: FederationConfig,
    pub noise: NoiseConfig,
    pub probe: ProbeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// `synthetic` or `csv`.
    pub source: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub cluster_spread: f64,
    pub path: Option<PathBuf>,
    pub has_header: bool,
    /// Held-out fraction used for evaluation every round.
    pub eval_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    /// `iid`, `dirichlet` or `labels`.
    pub scheme: String,
    pub beta: f64,
    pub labels_per_client: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `mlp` or `logistic`.
    pub kind: String,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FederationConfig {
    pub n_clients: usize,
    pub clients_per_round: usize,
    pub rounds: usize,
    /// Local passes over each shard. Ignored when `local_steps` is set.
    pub local_epochs: usize,
    pub local_steps: Option<usize>,
    pub batch_size: usize,
    pub lr: f64,
    /// When nonempty, `compare` trains every codec at each of these
    /// learning rates and keeps the one with the best final accuracy.
    pub lr_grid: Vec<f64>,
    pub topk_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// `uniform`, `gaussian` or `two_point`.
    pub dist: String,
    /// Half-width (or standard deviation for Gaussian noise). Defaults per
    /// mask mode when omitted.
    pub magnitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Any of `q`, `pm_factor`, `slope`, `drift`.
    pub probes: Vec<String>,
    pub pm_steps: usize,
    pub pm_dim: usize,
    pub trials: usize,
    pub q_trials: usize,
    pub slope_rounds: usize,
    pub drift_rounds: usize,
    pub drift_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output: PathBuf::from("runs/default"),
            codecs: vec!["none".into(), "mrn_binary".into()],
            threads: 0,
            record_timing: false,
            dataset: DatasetConfig::default(),
            partition: PartitionConfig::default(),
            model: ModelConfig::default(),
            federation: FederationConfig::default(),
            noise: NoiseConfig::default(),
            probe: ProbeConfig::default(),
        }
    }
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            source: "synthetic".into(),
            n_samples: 5000,
            n_features: 20,
            n_classes: 3,
            cluster_spread: 2.0,
            path: None,
            has_header: true,
            eval_fraction: 0.2,
        }
    }
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            scheme: "dirichlet".into(),
            beta: 0.3,
            labels_per_client: 2,
        }
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: "mlp".into(),
            hidden: 32,
        }
    }
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            n_clients: 100,
            clients_per_round: 10,
            rounds: 100,
            local_epochs: 10,
            local_steps: None,
            batch_size: 64,
            lr: 0.1,
            lr_grid: Vec::new(),
            topk_fraction: 0.03,
        }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            dist: "uniform".into(),
            magnitude: None,
        }
    }
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            probes: vec!["q".into(), "pm_factor".into(), "slope".into(), "drift".into()],
            pm_steps: 10,
            pm_dim: 64,
            trials: 10_000,
            q_trials: 100,
            slope_rounds: 500,
            drift_rounds: 50,
            drift_steps: 5,
        }
    }
}

/// Which data partition to build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartitionScheme {
    Iid,
    Dirichlet { beta: f64 },
    Labels { per_client: usize },
}

/// Which probe to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Probe {
    Q,
    PmFactor,
    Slope,
    Drift,
}

impl RunConfig {
    pub fn codec_ids(&self) -> Result<Vec<CodecId>> {
        if self.codecs.is_empty() {
            return Err(Error::config("codecs", "must name at least one codec"));
        }
        self.codecs
            .iter()
            .map(|c| c.parse::<CodecId>().map_err(|e| Error::config("codecs", e)))
            .collect()
    }

    pub fn noise_dist(&self) -> Result<NoiseDist> {
        self.noise
            .dist
            .parse()
            .map_err(|e: String| Error::config("noise.dist", e))
    }

    pub fn model_kind(&self) -> Result<ModelKind> {
        match self.model.kind.as_str() {
            "mlp" if self.model.hidden == 0 => Err(Error::config("model.hidden", "must be positive")),
            "mlp" => Ok(ModelKind::Mlp {
                hidden: self.model.hidden,
            }),
            "logistic" | "logistic_regression" => Ok(ModelKind::LogisticRegression),
            other => Err(Error::config("model.kind", format!("unknown model `{other}`"))),
        }
    }

    pub fn partition_scheme(&self) -> Result<PartitionScheme> {
        match self.partition.scheme.as_str() {
            "iid" => Ok(PartitionScheme::Iid),
            "dirichlet" => Ok(PartitionScheme::Dirichlet {
                beta: self.partition.beta,
            }),
            "labels" => Ok(PartitionScheme::Labels {
                per_client: self.partition.labels_per_client,
            }),
            other => Err(Error::config("partition.scheme", format!("unknown scheme `{other}`"))),
        }
    }

    pub fn probes(&self) -> Result<Vec<Probe>> {
        self.probe
            .probes
            .iter()
            .map(|p| match p.as_str() {
                "q" => Ok(Probe::Q),
                "pm_factor" => Ok(Probe::PmFactor),
                "slope" => Ok(Probe::Slope),
                "drift" => Ok(Probe::Drift),
                other => Err(Error::config("probe.probes", format!("unknown probe `{other}`"))),
            })
            .collect()
    }

    /// Federation settings for one codec.
    pub fn fed_config(&self, codec: CodecId) -> Result<FedConfig> {
        let f = &self.federation;
        let magnitude = self.noise.magnitude.unwrap_or_else(|| default_noise_magnitude(codec));
        let config = FedConfig {
            n_clients: f.n_clients,
            clients_per_round: f.clients_per_round,
            rounds: f.rounds,
            local_work: match f.local_steps {
                Some(s) => LocalWork::Steps(s),
                None => LocalWork::Epochs(f.local_epochs),
            },
            batch_size: f.batch_size,
            lr: LrSchedule::Constant(f.lr),
            codec,
            topk_fraction: f.topk_fraction,
            noise_dist: self.noise_dist()?,
            noise_scale: NoiseScale::Fixed(magnitude),
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks every invariant that can be checked without touching data.
    pub fn validate(&self) -> Result<()> {
        for codec in self.codec_ids()? {
            self.fed_config(codec)?;
        }
        self.model_kind()?;
        self.probes()?;
        let d = &self.dataset;
        match d.source.as_str() {
            "synthetic" => {
                if d.n_samples == 0 {
                    return Err(Error::config("dataset.n_samples", "must be positive"));
                }
                if d.n_features == 0 {
                    return Err(Error::config("dataset.n_features", "must be positive"));
                }
                if d.n_classes < 2 {
                    return Err(Error::config("dataset.n_classes", "need at least two classes"));
                }
                if !(d.cluster_spread >= 0.0) {
                    return Err(Error::config("dataset.cluster_spread", "must be non-negative"));
                }
            }
            "csv" => match &d.path {
                None => return Err(Error::config("dataset.path", "required when source = \"csv\"")),
                Some(p) if !p.is_file() => {
                    return Err(Error::config(
                        "dataset.path",
                        format!("{} is not a readable file", p.display()),
                    ))
                }
                Some(_) => {}
            },
            other => return Err(Error::config("dataset.source", format!("unknown source `{other}`"))),
        }
        if !(d.eval_fraction > 0.0 && d.eval_fraction < 1.0) {
            return Err(Error::config("dataset.eval_fraction", "must lie in (0, 1)"));
        }
        match self.partition_scheme()? {
            PartitionScheme::Dirichlet { beta } if !(beta > 0.0) => {
                return Err(Error::config("partition.beta", "must be positive"))
            }
            PartitionScheme::Labels { per_client: 0 } => {
                return Err(Error::config("partition.labels_per_client", "must be positive"))
            }
            _ => {}
        }
        if self.federation.lr_grid.iter().any(|&lr| !(lr > 0.0 && lr.is_finite())) {
            return Err(Error::config("federation.lr_grid", "learning rates must be positive"));
        }
        if let Some(m) = self.noise.magnitude {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::config("noise.magnitude", "must be positive"));
            }
        }
        let p = &self.probe;
        for (key, v) in [
            ("probe.pm_steps", p.pm_steps),
            ("probe.pm_dim", p.pm_dim),
            ("probe.trials", p.trials),
            ("probe.q_trials", p.q_trials),
            ("probe.slope_rounds", p.slope_rounds),
            ("probe.drift_rounds", p.drift_rounds),
            ("probe.drift_steps", p.drift_steps),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be positive"));
            }
        }
        Ok(())
    }
}

/// Parses a `key=value` override. The value is read as a TOML value when it
/// parses as one and as a bare string otherwise.
fn parse_override(raw: &str) -> Result<(String, toml::Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| Error::config(raw, "override must look like key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::config(raw, "override has an empty key"));
    }
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

fn apply_override(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().unwrap_or(key);
    let mut table = root;
    for part in parts {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{part}` is not a section")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Parses config text, applies `overrides` (later wins, and every override
/// wins over the file), fills defaults and validates.
pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
        key: "<file>".into(),
        msg: e.message().to_string(),
    })?;
    for raw in overrides {
        let (key, value) = parse_override(raw)?;
        apply_override(&mut table, &key, value)?;
    }
    let config: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().to_string();
        let key = match msg.split('`').nth(1).filter(|_| msg.starts_with("unknown field")) {
            Some(field) if path == "." => field.to_string(),
            Some(field) if !path.ends_with(field) => format!("{path}.{field}"),
            _ => path,
        };
        Error::Config { key, msg }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        key: "<file>".into(),
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config_str(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_text_gives_defaults() {
        let c = parse_config_str("", &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        let f = c.fed_config(CodecId::MrnBinary).unwrap();
        assert_eq!(f.noise_for_round(0).magnitude, 1e-2);
        assert_eq!(f.noise_for_round(0).dist, NoiseDist::Uniform);
        assert_eq!(
            c.fed_config(CodecId::MrnSigned).unwrap().noise_for_round(0).magnitude,
            5e-3
        );
    }

    #[test]
    fn errors_name_the_key() {
        assert_eq!(key_of(parse_config_str("codecs = []", &[]).unwrap_err()), "codecs");
        let k_gt_n = "[federation]\nn_clients = 5\nclients_per_round = 6";
        assert_eq!(
            key_of(parse_config_str(k_gt_n, &[]).unwrap_err()),
            "federation.clients_per_round"
        );
        assert_eq!(
            key_of(parse_config_str("[federation]\nbogus = 1", &[]).unwrap_err()),
            "federation.bogus"
        );
        assert_eq!(key_of(parse_config_str("bogus = 1", &[]).unwrap_err()), "bogus");
        assert_eq!(
            key_of(parse_config_str("[federation]\nrounds = \"ten\"", &[]).unwrap_err()),
            "federation.rounds"
        );
        assert_eq!(
            key_of(parse_config_str("[noise]\nmagnitude = -1.0", &[]).unwrap_err()),
            "noise.magnitude"
        );
        assert_eq!(
            key_of(parse_config_str("codecs = [\"zip\"]", &[]).unwrap_err()),
            "codecs"
        );
    }

    #[test]
    fn overrides_win() {
        let text = "seed = 3\n[federation]\nrounds = 7";
        let c = parse_config_str(text, &["federation.rounds=9".into(), "seed=11".into()]).unwrap();
        assert_eq!(c.federation.rounds, 9);
        assert_eq!(c.seed, 11);
        let c = parse_config_str(text, &["codecs=[\"fedavg\",\"fedmrns\"]".into(), "output=out/x".into()]).unwrap();
        assert_eq!(c.codec_ids().unwrap(), vec![CodecId::None, CodecId::MrnSigned]);
        assert_eq!(c.output, PathBuf::from("out/x"));
        assert!(parse_config_str("", &["federation.rounds".into()]).is_err());
    }
}
