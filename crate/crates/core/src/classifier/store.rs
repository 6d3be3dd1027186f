//! Bank checkpoints: a directory holding `manifest.json` and one HBNN file
//! per classifier.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bank::{Child, ClassifierBank, ClassifierMode, NetKey};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::neural::checkpoint;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetEntry {
    pub child: Child,
    pub config: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankManifest {
    pub mode: ClassifierMode,
    pub prior_b: f64,
    pub prior_logit: f64,
    /// logits of P(diagnosis = yes | season), `[pneu, inf][season]`
    pub table_logits: [[f64; 2]; 2],
    pub seed: u64,
    pub empty_text: Embedding,
    pub nets: Vec<NetEntry>,
}

impl ClassifierBank {
    pub fn save(&self, dir: &Path, seed: u64) -> Result<()> {
        crate::error::create_dir_all(dir)?;
        let mut nets = Vec::new();
        for (key, net) in &self.nets {
            let file = format!("{}_{}.hbnn", key.child.name(), key.config);
            checkpoint::save(net, seed, &dir.join(&file))?;
            nets.push(NetEntry { child: key.child, config: key.config, file });
        }
        let manifest = BankManifest {
            mode: self.mode,
            prior_b: self.prior_b(),
            prior_logit: self.prior_logit,
            table_logits: self.table_logits,
            seed,
            empty_text: self.empty_text.clone(),
            nets,
        };
        crate::error::write(&dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<(Self, BankManifest)> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        let m: BankManifest = serde_json::from_str(&text)?;
        let mut nets = BTreeMap::new();
        for e in &m.nets {
            let (net, _) = checkpoint::load(&dir.join(&e.file))?;
            if nets.insert(NetKey::new(e.child, e.config), net).is_some() {
                return Err(Error::Checkpoint(format!("duplicate classifier {}", e.file)));
            }
        }
        let expected = ClassifierBank::net_keys(m.mode);
        if nets.keys().copied().collect::<Vec<_>>() != expected {
            return Err(Error::Checkpoint(format!("{:?} bank needs {} classifiers", m.mode, expected.len())));
        }
        if nets.values().any(|n| n.input_dim() != m.empty_text.dim()) {
            return Err(Error::Checkpoint("classifier input size differs from the empty-text vector".into()));
        }
        let bank = ClassifierBank {
            mode: m.mode,
            prior_logit: m.prior_logit,
            table_logits: m.table_logits,
            nets,
            empty_text: m.empty_text.clone(),
        };
        Ok((bank, m))
    }
}
