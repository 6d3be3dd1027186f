use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::{self, ClassifierBank, ClassifierMode};
use crate::data::schema::{self, Diagnosis};
use crate::data::{Dataset, PatientRecord};
use crate::discrete::DiscreteBn;
use crate::error::{Error, Result};
use crate::evidence::EvidencePattern;
use crate::ff::{self, FfConfig, FfEvidence, FfModel};
use crate::gaussian::{CovarianceKind, GenModel, TextParents};

/// The models compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "BN")]
    Bn,
    #[serde(rename = "BN++")]
    BnPlus,
    #[serde(rename = "FF")]
    Ff,
    #[serde(rename = "GEN")]
    Gen,
    #[serde(rename = "DISCR")]
    Discr,
    #[serde(rename = "GEN-")]
    GenAblated,
    #[serde(rename = "DISCR-")]
    DiscrAblated,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Bn,
        ModelKind::BnPlus,
        ModelKind::Ff,
        ModelKind::Gen,
        ModelKind::Discr,
        ModelKind::GenAblated,
        ModelKind::DiscrAblated,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Bn => "BN",
            ModelKind::BnPlus => "BN++",
            ModelKind::Ff => "FF",
            ModelKind::Gen => "GEN",
            ModelKind::Discr => "DISCR",
            ModelKind::GenAblated => "GEN-",
            ModelKind::DiscrAblated => "DISCR-",
        }
    }

    /// Tabular-only baselines cannot condition on text.
    pub fn admits(self, pattern: EvidencePattern) -> bool {
        match self {
            ModelKind::Bn | ModelKind::BnPlus => pattern == EvidencePattern::Bs,
            _ => true,
        }
    }

    pub fn patterns(self) -> Vec<EvidencePattern> {
        EvidencePattern::ALL.into_iter().filter(|p| self.admits(*p)).collect()
    }

    /// Whether training involves random initialization or shuffling.
    pub fn is_stochastic(self) -> bool {
        matches!(self, ModelKind::Ff | ModelKind::Discr | ModelKind::DiscrAblated)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bn" => Ok(ModelKind::Bn),
            "bnpp" | "bn++" => Ok(ModelKind::BnPlus),
            "ff" => Ok(ModelKind::Ff),
            "gen" => Ok(ModelKind::Gen),
            "discr" => Ok(ModelKind::Discr),
            "gen-" => Ok(ModelKind::GenAblated),
            "discr-" => Ok(ModelKind::DiscrAblated),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

/// Hyperparameters for every model family. Seeds are set per run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub alpha: f64,
    pub covariance: CovarianceKind,
    pub discr: classifier::TrainConfig,
    pub ff: FfConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            alpha: 0.85,
            covariance: CovarianceKind::Full,
            discr: classifier::TrainConfig::default(),
            ff: FfConfig::default(),
        }
    }
}

/// A fitted model of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Bn(DiscreteBn),
    BnPlus(DiscreteBn),
    Ff { pneu: FfModel, inf: FfModel },
    Gen(GenModel),
    GenAblated(GenModel),
    Discr(ClassifierBank),
    DiscrAblated(ClassifierBank),
}

impl TrainedModel {
    pub fn train(kind: ModelKind, data: &Dataset, cfg: &ModelConfig, seed: u64) -> Result<Self> {
        Ok(match kind {
            ModelKind::Bn => TrainedModel::Bn(schema::tabular_structure().fit(&data.assignments(false))?),
            ModelKind::BnPlus => {
                if !data.records.iter().any(PatientRecord::has_hidden) {
                    return Err(Error::InvalidData("BN++ needs training records with fever and pain".into()));
                }
                TrainedModel::BnPlus(schema::extended_structure().fit(&data.assignments(true))?)
            }
            ModelKind::Ff => {
                let c = FfConfig { seed, ..cfg.ff };
                TrainedModel::Ff {
                    pneu: ff::train_ff(data, Diagnosis::Pneu, &c)?,
                    inf: ff::train_ff(data, Diagnosis::Inf, &c)?,
                }
            }
            ModelKind::Gen => TrainedModel::Gen(GenModel::fit(data, cfg.alpha, TextParents::Full, cfg.covariance)?),
            ModelKind::GenAblated => {
                TrainedModel::GenAblated(GenModel::fit(data, cfg.alpha, TextParents::Ablated, cfg.covariance)?)
            }
            ModelKind::Discr | ModelKind::DiscrAblated => {
                let mode = if kind == ModelKind::Discr { ClassifierMode::Full } else { ClassifierMode::Ablated };
                let c = classifier::TrainConfig { seed, ..cfg.discr };
                let (bank, _) = classifier::train_bank(data, mode, &c)?;
                if mode == ClassifierMode::Full {
                    TrainedModel::Discr(bank)
                } else {
                    TrainedModel::DiscrAblated(bank)
                }
            }
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Bn(_) => ModelKind::Bn,
            TrainedModel::BnPlus(_) => ModelKind::BnPlus,
            TrainedModel::Ff { .. } => ModelKind::Ff,
            TrainedModel::Gen(_) => ModelKind::Gen,
            TrainedModel::GenAblated(_) => ModelKind::GenAblated,
            TrainedModel::Discr(_) => ModelKind::Discr,
            TrainedModel::DiscrAblated(_) => ModelKind::DiscrAblated,
        }
    }

    /// Posterior `[P(no), P(yes)]` of a diagnosis for one record under an
    /// evidence pattern.
    pub fn posterior(&self, record: &PatientRecord, pattern: EvidencePattern, query: Diagnosis) -> Result<Vec<f64>> {
        let kind = self.kind();
        if !kind.admits(pattern) {
            return Err(Error::InvalidArgument(format!(
                "{kind} only accepts background and symptoms as evidence (pattern B+S), not {}",
                pattern.label()
            )));
        }
        match self {
            TrainedModel::Bn(bn) => bn.posterior(query.name(), &pattern.evidence(record, false).tabular),
            TrainedModel::BnPlus(bn) => bn.posterior(query.name(), &pattern.evidence(record, true).tabular),
            TrainedModel::Ff { pneu, inf } => {
                let mode = match pattern {
                    EvidencePattern::Bst => FfEvidence::Full,
                    EvidencePattern::Bs => FfEvidence::NoText,
                    EvidencePattern::Bt => FfEvidence::NoSymptoms,
                };
                let net = if query == Diagnosis::Pneu { pneu } else { inf };
                let p = net.predict(record, mode)?;
                Ok(vec![1.0 - p, p])
            }
            TrainedModel::Gen(m) | TrainedModel::GenAblated(m) => m.posterior(&pattern.evidence(record, false), query),
            TrainedModel::Discr(b) | TrainedModel::DiscrAblated(b) => {
                b.posterior(&pattern.evidence(record, false), query)
            }
        }
    }

    /// P(diagnosis = yes) for every record.
    pub fn scores(&self, records: &[PatientRecord], pattern: EvidencePattern, query: Diagnosis) -> Result<Vec<f64>> {
        records.iter().map(|r| Ok(self.posterior(r, pattern, query)?[1])).collect()
    }
}
