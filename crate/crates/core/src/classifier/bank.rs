use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::schema::{Diagnosis, COUGH, DYSP, INF, NASAL, PNEU, SEASON, SYMPTOMS};
use crate::data::PatientRecord;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::evidence::Evidence;
use crate::math::log_sum_exp;
use crate::neural::{bernoulli_log_probs, sigmoid, DenseNet};

/// Child variable of a text classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Child {
    Pneu,
    Inf,
    Dysp,
    Cough,
    Nasal,
}

impl Child {
    pub const ALL: [Child; 5] = [Child::Pneu, Child::Inf, Child::Dysp, Child::Cough, Child::Nasal];

    pub fn name(self) -> &'static str {
        match self {
            Child::Pneu => PNEU,
            Child::Inf => INF,
            Child::Dysp => DYSP,
            Child::Cough => COUGH,
            Child::Nasal => NASAL,
        }
    }

    pub fn parents(self) -> &'static [&'static str] {
        match self {
            Child::Pneu | Child::Inf => &[SEASON],
            Child::Dysp => &[PNEU],
            Child::Cough => &[PNEU, INF],
            Child::Nasal => &[INF],
        }
    }

    pub fn n_configs(self) -> usize {
        1 << self.parents().len()
    }

    pub fn is_diagnosis(self) -> bool {
        matches!(self, Child::Pneu | Child::Inf)
    }
}

/// Identifies one classifier: `P(child | parents = config, T)`, where
/// `config` indexes the parent levels row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NetKey {
    pub child: Child,
    pub config: usize,
}

impl NetKey {
    pub fn new(child: Child, config: usize) -> Self {
        NetKey { child, config }
    }

    pub fn parent_levels(&self) -> Vec<usize> {
        let k = self.child.parents().len();
        (0..k).rev().map(|b| (self.config >> b) & 1).collect()
    }
}

impl fmt::Display for NetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parents: Vec<String> = self
            .child
            .parents()
            .iter()
            .zip(self.parent_levels())
            .map(|(p, l)| format!("{p}={l}"))
            .collect();
        write!(f, "P({} | {}, T)", self.child.name(), parents.join(", "))
    }
}

/// Whether diagnoses depend on the text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierMode {
    /// Diagnoses and symptoms all have text classifiers (12 nets).
    Full,
    /// Diagnoses use plain tables given season; only symptoms have text
    /// classifiers (8 nets).
    Ablated,
}

/// Assignment of season, both diagnoses and the three symptoms, used to
/// route an embedding through the matching classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Configuration {
    pub season: usize,
    pub pneu: usize,
    pub inf: usize,
    pub symptoms: Option<[usize; 3]>,
}

impl Configuration {
    pub fn of(record: &PatientRecord) -> Self {
        Configuration { season: record.season, pneu: record.pneu, inf: record.inf, symptoms: record.symptoms }
    }
}

/// One factor of the conditional joint likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// `P(season)`
    Prior,
    /// `P(diagnosis | season)` in ablated mode
    Table { diagnosis: Diagnosis, season: usize },
    Net(NetKey),
}

/// Text-conditioned Bayesian network: a Bernoulli prior on season and one
/// neural classifier per parent configuration of every other variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierBank {
    pub(crate) mode: ClassifierMode,
    /// logit of P(season = cold)
    pub(crate) prior_logit: f64,
    /// logits of P(diagnosis = yes | season), `[diagnosis][season]`; ablated mode only
    pub(crate) table_logits: [[f64; 2]; 2],
    pub(crate) nets: BTreeMap<NetKey, DenseNet>,
    pub(crate) empty_text: Embedding,
}

impl ClassifierBank {
    pub fn net_keys(mode: ClassifierMode) -> Vec<NetKey> {
        Child::ALL
            .iter()
            .filter(|c| mode == ClassifierMode::Full || !c.is_diagnosis())
            .flat_map(|&c| (0..c.n_configs()).map(move |k| NetKey::new(c, k)))
            .collect()
    }

    pub fn from_parts(
        mode: ClassifierMode,
        prior_b: f64,
        table: [[f64; 2]; 2],
        nets: BTreeMap<NetKey, DenseNet>,
        empty_text: Embedding,
    ) -> Result<Self> {
        let expected = Self::net_keys(mode);
        if nets.keys().copied().collect::<Vec<_>>() != expected {
            return Err(Error::InvalidArgument(format!(
                "{mode:?} bank needs exactly {} classifiers",
                expected.len()
            )));
        }
        if nets.values().any(|n| n.input_dim() != empty_text.dim()) {
            return Err(Error::DimensionMismatch {
                expected: empty_text.dim(),
                actual: nets.values().map(|n| n.input_dim()).find(|&d| d != empty_text.dim()).unwrap(),
            });
        }
        let check = |p: f64| (0.0..=1.0).contains(&p);
        if !check(prior_b) || !table.iter().flatten().all(|&p| check(p)) {
            return Err(Error::InvalidArgument("probabilities must lie in [0, 1]".into()));
        }
        let logit = |p: f64| (p / (1.0 - p)).ln();
        Ok(ClassifierBank {
            mode,
            prior_logit: logit(prior_b),
            table_logits: table.map(|r| r.map(logit)),
            nets,
            empty_text,
        })
    }

    pub fn mode(&self) -> ClassifierMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.empty_text.dim()
    }

    /// P(season = cold).
    pub fn prior_b(&self) -> f64 {
        sigmoid(self.prior_logit)
    }

    /// P(diagnosis = yes | season) from the ablated-mode tables.
    pub fn table(&self, diagnosis: Diagnosis, season: usize) -> f64 {
        sigmoid(self.table_logits[diagnosis.index()][season])
    }

    pub fn empty_text(&self) -> &Embedding {
        &self.empty_text
    }

    pub fn net(&self, key: NetKey) -> &DenseNet {
        &self.nets[&key]
    }

    pub fn nets(&self) -> &BTreeMap<NetKey, DenseNet> {
        &self.nets
    }

    /// Factors of the conditional joint for one configuration, each paired
    /// with the observed child level. Unobserved symptoms contribute none.
    pub fn factors(&self, c: &Configuration) -> Vec<(Factor, usize)> {
        let mut out = vec![(Factor::Prior, c.season)];
        match self.mode {
            ClassifierMode::Full => {
                out.push((Factor::Net(NetKey::new(Child::Pneu, c.season)), c.pneu));
                out.push((Factor::Net(NetKey::new(Child::Inf, c.season)), c.inf));
            }
            ClassifierMode::Ablated => {
                out.push((Factor::Table { diagnosis: Diagnosis::Pneu, season: c.season }, c.pneu));
                out.push((Factor::Table { diagnosis: Diagnosis::Inf, season: c.season }, c.inf));
            }
        }
        if let Some([dysp, cough, nasal]) = c.symptoms {
            out.push((Factor::Net(NetKey::new(Child::Dysp, c.pneu)), dysp));
            out.push((Factor::Net(NetKey::new(Child::Cough, c.pneu * 2 + c.inf)), cough));
            out.push((Factor::Net(NetKey::new(Child::Nasal, c.inf)), nasal));
        }
        out
    }

    /// Classifiers evaluated for one configuration.
    pub fn routes(&self, c: &Configuration) -> Vec<NetKey> {
        self.factors(c)
            .into_iter()
            .filter_map(|(f, _)| match f {
                Factor::Net(k) => Some(k),
                _ => None,
            })
            .collect()
    }

    /// Logit of the factor's "yes"/"cold" level.
    fn factor_logit(&self, f: Factor, text: &[f64]) -> Result<f64> {
        match f {
            Factor::Prior => Ok(self.prior_logit),
            Factor::Table { diagnosis, season } => Ok(self.table_logits[diagnosis.index()][season]),
            Factor::Net(k) => self.nets[&k].predict_logit(text),
        }
    }

    /// Negative log of the conditional joint likelihood of one record, with
    /// the empty-text vector standing in for a missing note.
    pub fn record_nll(&self, record: &PatientRecord) -> Result<f64> {
        let text = record.embedding.as_ref().unwrap_or(&self.empty_text);
        self.check_dim(text)?;
        let mut nll = 0.0;
        for (f, level) in self.factors(&Configuration::of(record)) {
            nll -= bernoulli_log_probs(self.factor_logit(f, text.as_slice())?)[level];
        }
        Ok(nll)
    }

    fn check_dim(&self, t: &Embedding) -> Result<()> {
        if t.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: t.dim() });
        }
        Ok(())
    }

    fn read_evidence<'a>(&'a self, evidence: &'a Evidence) -> Result<(Option<usize>, [Option<usize>; 3], &'a Embedding)> {
        for (name, level) in evidence.tabular.iter() {
            let known = name == SEASON || SYMPTOMS.contains(&name);
            if !known {
                return Err(if name == PNEU || name == INF {
                    Error::QueryInEvidence(name.to_string())
                } else {
                    Error::UnknownVariable(name.to_string())
                });
            }
            if level > 1 {
                return Err(Error::LevelOutOfRange { variable: name.to_string(), level, cardinality: 2 });
            }
        }
        let text = evidence.text.as_ref().unwrap_or(&self.empty_text);
        self.check_dim(text)?;
        let symptoms = SYMPTOMS.map(|s| evidence.tabular.get(s));
        Ok((evidence.tabular.get(SEASON), symptoms, text))
    }

    /// Posterior over the query diagnosis given season, any subset of
    /// symptoms and the text (the empty-text vector when absent).
    pub fn posterior(&self, evidence: &Evidence, query: Diagnosis) -> Result<Vec<f64>> {
        let (season, symptoms, text) = self.read_evidence(evidence)?;
        let x = text.as_slice();

        // Text-only query in the full model: the diagnosis classifier itself.
        if let (Some(b), ClassifierMode::Full, [None, None, None]) = (season, self.mode, symptoms) {
            let key = NetKey::new(if query == Diagnosis::Pneu { Child::Pneu } else { Child::Inf }, b);
            let p = self.nets[&key].predict(x)?;
            return Ok(vec![1.0 - p, p]);
        }

        let mut cache: BTreeMap<NetKey, [f64; 2]> = BTreeMap::new();
        let mut terms: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let seasons: Vec<usize> = season.map_or(vec![0, 1], |b| vec![b]);
        for &b in &seasons {
            for d0 in 0..2 {
                for d1 in 0..2 {
                    let c = Configuration { season: b, pneu: d0, inf: d1, symptoms: None };
                    let mut lw = 0.0;
                    for (f, level) in self.factors(&c) {
                        lw += self.log_prob(f, level, x, &mut cache)?;
                    }
                    let sym_factors = [
                        (NetKey::new(Child::Dysp, d0), symptoms[0]),
                        (NetKey::new(Child::Cough, d0 * 2 + d1), symptoms[1]),
                        (NetKey::new(Child::Nasal, d1), symptoms[2]),
                    ];
                    for (k, s) in sym_factors {
                        if let Some(level) = s {
                            lw += self.log_prob(Factor::Net(k), level, x, &mut cache)?;
                        }
                    }
                    let q = if query == Diagnosis::Pneu { d0 } else { d1 };
                    terms[q].push(lw);
                }
            }
        }
        let per = [log_sum_exp(&terms[0]), log_sum_exp(&terms[1])];
        let total = log_sum_exp(&per);
        if !total.is_finite() {
            return Err(Error::ZeroEvidence);
        }
        Ok(per.iter().map(|l| (l - total).exp()).collect())
    }

    fn log_prob(&self, f: Factor, level: usize, x: &[f64], cache: &mut BTreeMap<NetKey, [f64; 2]>) -> Result<f64> {
        if let Factor::Net(k) = f {
            if let Some(lp) = cache.get(&k) {
                return Ok(lp[level]);
            }
            let lp = bernoulli_log_probs(self.nets[&k].predict_logit(x)?);
            cache.insert(k, lp);
            return Ok(lp[level]);
        }
        Ok(bernoulli_log_probs(self.factor_logit(f, x)?)[level])
    }

    /// Output of every classifier that can contribute to a posterior under
    /// this evidence, for inspection.
    pub fn explain(&self, evidence: &Evidence) -> Result<Vec<(NetKey, f64)>> {
        let (season, symptoms, text) = self.read_evidence(evidence)?;
        let mut out = Vec::new();
        for key in Self::net_keys(self.mode) {
            let relevant = if key.child.is_diagnosis() {
                season.is_none_or(|b| key.config == b)
            } else {
                let i = SYMPTOMS.iter().position(|s| *s == key.child.name()).unwrap();
                symptoms[i].is_some()
            };
            if relevant {
                out.push((key, self.nets[&key].predict(text.as_slice())?));
            }
        }
        Ok(out)
    }
}
