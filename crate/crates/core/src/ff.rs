//! Feed-forward baseline: one monolithic classifier per diagnosis over a
//! one-hot tabular encoding concatenated with the text embedding.
//!
//! Base encoding (11 slots): season `[warm, cold]`, then dysp, cough and
//! nasal each `[no, yes, unobserved]`. The optional interaction block (180
//! slots) holds the outer products of every pair, triple and the quadruple
//! of those four one-hot blocks, in lexicographic order of the variable
//! tuples, each product laid out row-major.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Diagnosis, PatientRecord};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::neural::{checkpoint, train_bce, Activation, AdamConfig, BatchConfig, DenseNet, LayerSpec};
use crate::rng;

pub const BASE_DIM: usize = 11;
pub const INTERACTION_DIM: usize = 180;

const BLOCK_SIZES: [usize; 4] = [2, 3, 3, 3];
const BLOCK_OFFSETS: [usize; 4] = [0, 2, 5, 8];

/// One-hot tabular features of a record.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularEncoding {
    pub base: [f64; BASE_DIM],
    pub interactions: Option<Vec<f64>>,
}

impl TabularEncoding {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.base.to_vec();
        if let Some(i) = &self.interactions {
            v.extend_from_slice(i);
        }
        v
    }

    pub fn dim(&self) -> usize {
        BASE_DIM + self.interactions.as_ref().map_or(0, Vec::len)
    }
}

/// Variable tuples of the interaction block, in layout order.
pub fn interaction_tuples() -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 2..=4 {
        let mut tuples = Vec::new();
        combinations(4, size, 0, &mut Vec::new(), &mut tuples);
        out.extend(tuples);
    }
    out
}

fn combinations(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        combinations(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Interaction features computed from a base encoding.
pub fn interactions(base: &[f64; BASE_DIM]) -> Vec<f64> {
    let mut out = Vec::with_capacity(INTERACTION_DIM);
    for tuple in interaction_tuples() {
        let mut block = vec![1.0];
        for &v in &tuple {
            let slots = &base[BLOCK_OFFSETS[v]..BLOCK_OFFSETS[v] + BLOCK_SIZES[v]];
            block = block.iter().flat_map(|&a| slots.iter().map(move |&s| a * s)).collect();
        }
        out.extend(block);
    }
    out
}

/// Encodes season and symptoms; `symptoms = None` marks all three as
/// unobserved.
pub fn encode_values(season: usize, symptoms: Option<[usize; 3]>, with_interactions: bool) -> Result<TabularEncoding> {
    if season > 1 {
        return Err(Error::LevelOutOfRange { variable: "season".into(), level: season, cardinality: 2 });
    }
    let mut base = [0.0; BASE_DIM];
    base[season] = 1.0;
    for (j, name) in crate::data::schema::SYMPTOMS.iter().enumerate() {
        let slot = match symptoms {
            None => 2,
            Some(s) if s[j] <= 1 => s[j],
            Some(s) => {
                return Err(Error::LevelOutOfRange { variable: name.to_string(), level: s[j], cardinality: 2 })
            }
        };
        base[BLOCK_OFFSETS[j + 1] + slot] = 1.0;
    }
    let interactions = with_interactions.then(|| interactions(&base));
    Ok(TabularEncoding { base, interactions })
}

pub fn encode(record: &PatientRecord, with_interactions: bool) -> Result<TabularEncoding> {
    encode_values(record.season, record.symptoms, with_interactions)
}

/// Which evidence the classifier sees at prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FfEvidence {
    Full,
    /// The empty-text embedding replaces the note.
    NoText,
    /// All symptoms are encoded as unobserved.
    NoSymptoms,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FfConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub pneu_hidden: usize,
    pub pneu_dropout: f64,
    pub pneu_interactions: bool,
    pub inf_hidden: usize,
    pub inf_dropout: f64,
    pub inf_interactions: bool,
}

impl Default for FfConfig {
    fn default() -> Self {
        FfConfig {
            epochs: 200,
            batch_size: 256,
            learning_rate: 1e-2,
            weight_decay: 1e-3,
            seed: 0,
            pneu_hidden: 256,
            pneu_dropout: 0.7,
            pneu_interactions: false,
            inf_hidden: 0,
            inf_dropout: 0.7,
            inf_interactions: true,
        }
    }
}

impl FfConfig {
    fn family(&self, d: Diagnosis) -> (usize, f64, bool) {
        match d {
            Diagnosis::Pneu => (self.pneu_hidden, self.pneu_dropout, self.pneu_interactions),
            Diagnosis::Inf => (self.inf_hidden, self.inf_dropout, self.inf_interactions),
        }
    }

    pub fn architecture(&self, d: Diagnosis, text_dim: usize) -> Vec<LayerSpec> {
        let (hidden, dropout, inter) = self.family(d);
        let input = BASE_DIM + if inter { INTERACTION_DIM } else { 0 } + text_dim;
        if hidden > 0 {
            vec![
                LayerSpec::new(input, hidden, Activation::Relu, dropout),
                LayerSpec::new(hidden, 1, Activation::Sigmoid, dropout),
            ]
        } else {
            vec![LayerSpec::new(input, 1, Activation::Sigmoid, dropout)]
        }
    }
}

/// A trained per-diagnosis classifier plus what it needs to build inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct FfModel {
    pub diagnosis: Diagnosis,
    pub interactions: bool,
    pub net: DenseNet,
    pub empty_text: Embedding,
}

impl FfModel {
    pub fn input(&self, season: usize, symptoms: Option<[usize; 3]>, text: &Embedding) -> Result<Vec<f64>> {
        let d = self.empty_text.dim();
        if text.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: text.dim() });
        }
        let mut x = encode_values(season, symptoms, self.interactions)?.to_vec();
        x.extend_from_slice(text.as_slice());
        Ok(x)
    }

    /// Probability of the diagnosis for `record` under the chosen evidence.
    pub fn predict(&self, record: &PatientRecord, mode: FfEvidence) -> Result<f64> {
        let text = match mode {
            FfEvidence::NoText => &self.empty_text,
            _ => record.embedding.as_ref().unwrap_or(&self.empty_text),
        };
        let symptoms = if mode == FfEvidence::NoSymptoms { None } else { record.symptoms };
        self.net.predict(&self.input(record.season, symptoms, text)?)
    }

    pub fn save(&self, bin: &Path, seed: u64) -> Result<()> {
        checkpoint::save(&self.net, seed, bin)?;
        let manifest = FfManifest {
            diagnosis: self.diagnosis,
            interactions: self.interactions,
            seed,
            empty_text: self.empty_text.clone(),
        };
        crate::error::write(&ff_manifest_path(bin), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }

    pub fn load(bin: &Path) -> Result<Self> {
        let m: FfManifest = serde_json::from_str(&crate::error::read_to_string(&ff_manifest_path(bin))?)?;
        let (net, _) = checkpoint::load(bin)?;
        let expected = BASE_DIM + if m.interactions { INTERACTION_DIM } else { 0 } + m.empty_text.dim();
        if net.input_dim() != expected {
            return Err(Error::Checkpoint(format!("input size {} but encoding needs {expected}", net.input_dim())));
        }
        Ok(FfModel { diagnosis: m.diagnosis, interactions: m.interactions, net, empty_text: m.empty_text })
    }
}

/// Side information stored next to an FF checkpoint: the substitution
/// vector used for missing text and the encoding layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfManifest {
    pub diagnosis: Diagnosis,
    pub interactions: bool,
    pub seed: u64,
    pub empty_text: Embedding,
}

fn ff_manifest_path(bin: &Path) -> std::path::PathBuf {
    bin.with_extension("ff.json")
}

/// Trains the classifier for one diagnosis on all records.
pub fn train_ff(data: &Dataset, diagnosis: Diagnosis, cfg: &FfConfig) -> Result<FfModel> {
    data.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("no training records".into()));
    }
    let (_, _, inter) = cfg.family(diagnosis);
    let seed = rng::derive_seed(cfg.seed, diagnosis.name());
    let specs = cfg.architecture(diagnosis, data.dim());
    let net = DenseNet::new(&specs, &mut rng::stream(seed, "init"))?;
    let mut model = FfModel { diagnosis, interactions: inter, net, empty_text: data.empty_text.clone() };
    let mut inputs = Vec::with_capacity(data.len());
    let mut labels = Vec::with_capacity(data.len());
    for r in &data.records {
        inputs.push(model.input(r.season, r.symptoms, data.text_or_empty(r))?);
        labels.push(r.diagnosis(diagnosis) as f64);
    }
    let batch = BatchConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        adam: AdamConfig::with_lr(cfg.learning_rate, cfg.weight_decay),
        seed,
    };
    train_bce(&mut model.net, &inputs, &labels, &batch)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warm_unobserved_layout() {
        let e = encode_values(0, None, false).unwrap();
        assert_eq!(e.base, [1., 0., 0., 0., 1., 0., 0., 1., 0., 0., 1.]);
    }

    #[test]
    fn interaction_count() {
        let tuples = interaction_tuples();
        let size = |t: &Vec<usize>| t.iter().map(|&v| BLOCK_SIZES[v]).product::<usize>();
        let by_order: Vec<usize> = (2..=4)
            .map(|k| tuples.iter().filter(|t| t.len() == k).map(size).sum())
            .collect();
        assert_eq!(by_order, vec![45, 81, 54]);
        let e = encode_values(1, Some([1, 0, 1]), true).unwrap();
        assert_eq!(e.interactions.as_ref().unwrap().len(), INTERACTION_DIM);
        // exactly one active slot per tuple block
        assert_eq!(e.interactions.unwrap().iter().sum::<f64>(), tuples.len() as f64);
    }

    #[test]
    fn rejects_bad_level() {
        assert!(encode_values(0, Some([0, 2, 0]), false).is_err());
        assert!(encode_values(2, None, false).is_err());
    }
}
