use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hybrid_bn::classifier::TrainConfig;
use hybrid_bn::data::SyntheticParams;
use hybrid_bn::eval::{ModelConfig, ModelKind};
use hybrid_bn::ff::FfConfig;

/// Flat JSON config file. Every field is optional; command-line flags take
/// precedence, then these values, then built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub ground_truth: Option<PathBuf>,
    pub embedder: Option<SyntheticParams>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub weight_decay: Option<f64>,
    pub prior_learning_rate: Option<f64>,
    pub models: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
    pub report_auc: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Hyperparameters with config overrides applied.
    pub fn model_config(&self, alpha: Option<f64>) -> ModelConfig {
        let mut discr = TrainConfig::default();
        let mut ff = FfConfig::default();
        if let Some(e) = self.epochs {
            discr.epochs = e;
            ff.epochs = e;
        }
        if let Some(b) = self.batch_size {
            discr.batch_size = b;
            ff.batch_size = b;
        }
        if let Some(lr) = self.learning_rate {
            discr.learning_rate = lr;
            ff.learning_rate = lr;
        }
        if let Some(wd) = self.weight_decay {
            discr.weight_decay = wd;
            ff.weight_decay = wd;
        }
        if let Some(lr) = self.prior_learning_rate {
            discr.prior_learning_rate = lr;
        }
        ModelConfig {
            alpha: alpha.or(self.alpha).unwrap_or(ModelConfig::default().alpha),
            discr,
            ff,
            ..ModelConfig::default()
        }
    }

    pub fn models(&self) -> Result<Option<Vec<ModelKind>>> {
        let Some(names) = &self.models else { return Ok(None) };
        let kinds = names
            .iter()
            .map(|n| n.parse::<ModelKind>().map_err(anyhow::Error::msg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(kinds))
    }
}

/// Seed from the flag or the config; stochastic commands must have one.
pub fn require_seed(flag: Option<u64>, file: &FileConfig, what: &str) -> Result<u64> {
    match flag.or(file.seed) {
        Some(s) => Ok(s),
        None => bail!("{what} is stochastic: pass --seed N or set \"seed\" in the config"),
    }
}

/// Hex SHA-256 of a value's JSON form.
pub fn hash_json<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
