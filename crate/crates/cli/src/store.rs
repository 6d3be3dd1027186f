//! On-disk layout of dataset and checkpoint directories.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hybrid_bn::classifier::ClassifierBank;
use hybrid_bn::data::{load_external, Dataset};
use hybrid_bn::discrete::DiscreteBn;
use hybrid_bn::eval::{ModelConfig, ModelKind, TrainedModel};
use hybrid_bn::ff::FfModel;
use hybrid_bn::gaussian::{GaussianBank, GenModel};

pub const TRAIN: &str = "train.jsonl";
pub const TEST: &str = "test.jsonl";
pub const TRAIN_EXT: &str = "train_ext.jsonl";
pub const TEST_EXT: &str = "test_ext.jsonl";
pub const EMBEDDINGS: &str = "embeddings.jsonl";
pub const MANIFEST: &str = "manifest.json";

fn existing(path: PathBuf) -> Result<PathBuf> {
    if !path.exists() {
        bail!("{} does not exist", path.display());
    }
    Ok(path)
}

/// Train and test sets from a data directory. With `extended`, the
/// variants carrying fever and pain are used when present.
pub fn load_split(dir: &Path, embeddings: Option<&Path>, extended: bool) -> Result<(Dataset, Dataset)> {
    let emb = existing(embeddings.map_or_else(|| dir.join(EMBEDDINGS), Path::to_path_buf))?;
    let pick = |ext: &str, std: &str| {
        let e = dir.join(ext);
        if extended && e.exists() {
            Ok(e)
        } else {
            existing(dir.join(std))
        }
    };
    let train_path = pick(TRAIN_EXT, TRAIN)?;
    let test_path = pick(TEST_EXT, TEST)?;
    let train = load_external(&train_path, &emb).with_context(|| format!("loading {}", train_path.display()))?;
    let test = load_external(&test_path, &emb).with_context(|| format!("loading {}", test_path.display()))?;
    Ok((train, test))
}

/// Top-level description of a checkpoint directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub model: ModelKind,
    pub seed: u64,
    pub config: ModelConfig,
    pub config_hash: String,
    /// Generative models only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub train_records: usize,
}

const NETWORK: &str = "network.json";
const GAUSS_BIN: &str = "gaussians.bin";
const GAUSS_JSON: &str = "gaussians.json";
const BANK: &str = "bank";
const FF_PNEU: &str = "ff_pneu.hbnn";
const FF_INF: &str = "ff_inf.hbnn";

pub fn save_model(dir: &Path, model: &TrainedModel, manifest: &CheckpointManifest) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    match model {
        TrainedModel::Bn(bn) | TrainedModel::BnPlus(bn) => bn.save(&dir.join(NETWORK))?,
        TrainedModel::Gen(m) | TrainedModel::GenAblated(m) => {
            m.bn().save(&dir.join(NETWORK))?;
            m.bank().save(&dir.join(GAUSS_BIN), &dir.join(GAUSS_JSON))?;
        }
        TrainedModel::Discr(b) | TrainedModel::DiscrAblated(b) => b.save(&dir.join(BANK), manifest.seed)?,
        TrainedModel::Ff { pneu, inf } => {
            pneu.save(&dir.join(FF_PNEU), manifest.seed)?;
            inf.save(&dir.join(FF_INF), manifest.seed)?;
        }
    }
    std::fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(manifest)? + "\n")?;
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<(TrainedModel, CheckpointManifest)> {
    let path = existing(dir.join(MANIFEST))?;
    let manifest: CheckpointManifest = serde_json::from_str(&std::fs::read_to_string(&path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    let model = match manifest.model {
        ModelKind::Bn => TrainedModel::Bn(DiscreteBn::load(&existing(dir.join(NETWORK))?)?),
        ModelKind::BnPlus => TrainedModel::BnPlus(DiscreteBn::load(&existing(dir.join(NETWORK))?)?),
        ModelKind::Gen | ModelKind::GenAblated => {
            let bn = DiscreteBn::load(&existing(dir.join(NETWORK))?)?;
            let bank = GaussianBank::load(&existing(dir.join(GAUSS_BIN))?, &existing(dir.join(GAUSS_JSON))?)?;
            let m = GenModel::new(bn, bank)?;
            if manifest.model == ModelKind::Gen {
                TrainedModel::Gen(m)
            } else {
                TrainedModel::GenAblated(m)
            }
        }
        ModelKind::Discr | ModelKind::DiscrAblated => {
            let (bank, _) = ClassifierBank::load(&dir.join(BANK))?;
            if manifest.model == ModelKind::Discr {
                TrainedModel::Discr(bank)
            } else {
                TrainedModel::DiscrAblated(bank)
            }
        }
        ModelKind::Ff => TrainedModel::Ff {
            pneu: FfModel::load(&existing(dir.join(FF_PNEU))?)?,
            inf: FfModel::load(&existing(dir.join(FF_INF))?)?,
        },
    };
    if model.kind() != manifest.model {
        bail!("checkpoint holds {} but the manifest says {}", model.kind(), manifest.model);
    }
    Ok((model, manifest))
}
