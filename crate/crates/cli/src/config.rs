use std::path::{Path, PathBuf};

use radargnn::eval::ReductionConfig;
use radargnn::scene::DatasetSpec;
use radargnn::{InvarianceMode, ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Everything a run needs. Loaded from TOML or JSON, then overridden by flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives dataset generation, the split shuffle, weight init and batch order.
    pub seed: u64,
    /// Directory holding `train.jsonl`, `val.jsonl` and `test.jsonl`.
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    /// Split read by `eval`, `build-graph` and `invariance-test`.
    pub eval_split: String,
    pub dataset: DatasetSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub invariance: InvarianceSettings,
    pub reduction: ReductionSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvarianceSettings {
    pub modes: Vec<InvarianceMode>,
    pub transforms: usize,
    /// At most this many scenes of the split are used.
    pub max_scenes: usize,
    pub tolerance: f64,
}

impl Default for InvarianceSettings {
    fn default() -> Self {
        Self {
            modes: InvarianceMode::ALL.to_vec(),
            transforms: 20,
            max_scenes: 10,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionSettings {
    #[serde(flatten)]
    pub study: ReductionConfig,
    /// Exit with the gate code when the trend does not hold.
    pub gate: bool,
}

impl Default for ReductionSettings {
    fn default() -> Self {
        Self {
            study: ReductionConfig::default(),
            gate: true,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("runs"),
            checkpoint: None,
            eval_split: "test".into(),
            dataset: DatasetSpec::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            invariance: InvarianceSettings::default(),
            reduction: ReductionSettings::default(),
        }
    }
}

/// Flag values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<InvarianceMode>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub beta: Option<f64>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub split: Option<String>,
    pub spec: Option<PathBuf>,
}

fn parse_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

impl RunConfig {
    pub fn resolve(path: Option<&Path>, o: &Overrides) -> Result<Self, CliError> {
        let mut cfg: RunConfig = match path {
            Some(p) => parse_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(spec) = &o.spec {
            cfg.dataset = parse_file(spec)?;
        }
        if let Some(seed) = o.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = o.mode {
            cfg.model.mode = mode;
        }
        if let Some(e) = o.epochs {
            cfg.train.epochs = e;
        }
        if let Some(lr) = o.lr {
            cfg.train.learning_rate = lr;
        }
        if let Some(beta) = o.beta {
            cfg.model.loss.beta = beta;
        }
        if let Some(out) = &o.out {
            cfg.out_dir = out.clone();
        }
        if let Some(data) = &o.data {
            cfg.data_dir = data.clone();
        }
        if let Some(ck) = &o.checkpoint {
            cfg.checkpoint = Some(ck.clone());
        }
        if let Some(split) = &o.split {
            cfg.eval_split = split.clone();
        }
        cfg.train.seed = cfg.seed;
        cfg.model.validate()?;
        cfg.train.validate()?;
        Ok(cfg)
    }

    /// Hex SHA-256 of the resolved config serialized as JSON, with file locations blanked
    /// so the same experiment hashes the same wherever it runs.
    pub fn hash(&self) -> String {
        let located = RunConfig {
            data_dir: PathBuf::new(),
            out_dir: PathBuf::new(),
            checkpoint: None,
            ..self.clone()
        };
        let json = serde_json::to_vec(&located).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
