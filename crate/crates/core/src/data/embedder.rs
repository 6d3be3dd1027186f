//! Text-embedding sources: a seeded synthetic generator standing in for a
//! note writer plus sentence encoder, and a table of precomputed vectors.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::schema::*;
use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// Full symptom state of a patient, including the never-tabulated ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymptomState {
    pub dysp: usize,
    pub cough: usize,
    pub fever: usize,
    pub pain: usize,
    pub nasal: usize,
}

impl SymptomState {
    fn level_of(&self, symptom: &str) -> usize {
        match symptom {
            DYSP => self.dysp,
            COUGH => self.cough,
            FEVER => self.fever,
            PAIN => self.pain,
            NASAL => self.nasal,
            _ => 0,
        }
    }
}

/// Knobs for [`SyntheticEmbedder::generate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    pub d: usize,
    /// Per-dimension standard deviation of isotropic noise.
    pub sigma: f64,
    pub prototype_norm: f64,
    pub base_norm: f64,
    pub empty_norm: f64,
    /// Scale of the low-rank nuisance component.
    pub distractor_scale: f64,
    pub n_distractors: usize,
    /// Probability that a present symptom is mentioned in the note (and so
    /// contributes its prototype).
    pub mention_prob: f64,
    /// Seed of the fixed geometry (prototypes, base, empty-text vector).
    pub geometry_seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            d: 32,
            sigma: 0.1,
            prototype_norm: 2.0,
            base_norm: 1.0,
            empty_norm: 1.0,
            distractor_scale: 0.5,
            n_distractors: 4,
            mention_prob: 1.0,
            geometry_seed: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub symptom: String,
    pub level: usize,
    pub vector: Vec<f64>,
}

/// Embedding = base + sum of active symptom prototypes + isotropic noise +
/// a random combination of distractor directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEmbedder {
    pub d: usize,
    pub sigma: f64,
    pub distractor_scale: f64,
    #[serde(default = "always")]
    pub mention_prob: f64,
    pub base: Vec<f64>,
    pub prototypes: Vec<Prototype>,
    pub distractors: Vec<Vec<f64>>,
    pub empty_text: Vec<f64>,
}

fn always() -> f64 {
    1.0
}

fn random_direction<R: Rng>(rng: &mut R, d: usize, norm: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x * norm / n).collect()
}

impl SyntheticEmbedder {
    pub fn generate(p: &SyntheticParams) -> Result<Self> {
        if p.d == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(p.geometry_seed);
        let base = random_direction(&mut rng, p.d, p.base_norm);
        let empty_text = random_direction(&mut rng, p.d, p.empty_norm);
        let active: [(&str, usize); 6] =
            [(DYSP, 1), (COUGH, 1), (FEVER, 1), (FEVER, 2), (PAIN, 1), (NASAL, 1)];
        let prototypes = active
            .iter()
            .map(|&(s, l)| Prototype {
                symptom: s.to_string(),
                level: l,
                vector: random_direction(&mut rng, p.d, p.prototype_norm),
            })
            .collect();
        let distractors = (0..p.n_distractors)
            .map(|_| random_direction(&mut rng, p.d, 1.0))
            .collect();
        let e = SyntheticEmbedder {
            d: p.d,
            sigma: p.sigma,
            distractor_scale: p.distractor_scale,
            mention_prob: p.mention_prob,
            base,
            prototypes,
            distractors,
            empty_text,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let dims_ok = self.base.len() == self.d
            && self.empty_text.len() == self.d
            && self.prototypes.iter().all(|p| p.vector.len() == self.d)
            && self.distractors.iter().all(|v| v.len() == self.d);
        if !dims_ok {
            return Err(Error::InvalidArgument(format!("embedder vectors must have dimension {}", self.d)));
        }
        if self.sigma < 0.0 || self.distractor_scale < 0.0 {
            return Err(Error::InvalidArgument("noise scales must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.mention_prob) {
            return Err(Error::InvalidArgument("mention probability must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn empty(&self) -> Embedding {
        Embedding::new(self.empty_text.clone()).expect("validated")
    }

    /// Embedding of the note for one patient; the empty-text vector when no
    /// note was written.
    pub fn embed<R: Rng + ?Sized>(&self, state: &SymptomState, text_present: bool, rng: &mut R) -> Embedding {
        if !text_present {
            return self.empty();
        }
        let mut v = self.base.clone();
        for p in &self.prototypes {
            // one draw per prototype keeps the stream aligned across states
            let mentioned = self.mention_prob >= 1.0 || rng.random::<f64>() < self.mention_prob;
            if mentioned && state.level_of(&p.symptom) == p.level {
                v.iter_mut().zip(&p.vector).for_each(|(a, b)| *a += b);
            }
        }
        if self.sigma > 0.0 {
            for a in &mut v {
                *a += self.sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        if self.distractor_scale > 0.0 {
            for dir in &self.distractors {
                let c: f64 = rng.sample(StandardNormal);
                v.iter_mut().zip(dir).for_each(|(a, b)| *a += self.distractor_scale * c * b);
            }
        }
        Embedding::new(v).expect("finite by construction")
    }

    /// [`Self::embed`] driven by a seed.
    pub fn synth_embed(&self, state: &SymptomState, text_present: bool, seed: u64) -> Embedding {
        self.embed(state, text_present, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Precomputed embeddings keyed by record id, plus the empty-text vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub empty: Embedding,
    pub by_id: HashMap<u64, Embedding>,
}

impl EmbeddingTable {
    pub fn get(&self, id: u64) -> Result<&Embedding> {
        self.by_id
            .get(&id)
            .ok_or_else(|| Error::InvalidData(format!("no embedding for id {id}")))
    }
}

/// Where record embeddings come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EmbedderSpec {
    Synthetic(SyntheticEmbedder),
    File(EmbeddingTable),
}

impl EmbedderSpec {
    pub fn dim(&self) -> usize {
        match self {
            EmbedderSpec::Synthetic(s) => s.d,
            EmbedderSpec::File(t) => t.empty.dim(),
        }
    }

    pub fn empty(&self) -> Embedding {
        match self {
            EmbedderSpec::Synthetic(s) => s.empty(),
            EmbedderSpec::File(t) => t.empty.clone(),
        }
    }
}
