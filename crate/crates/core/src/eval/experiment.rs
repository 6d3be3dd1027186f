use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{average_precision, roc_auc};
use super::models::{ModelConfig, ModelKind, TrainedModel};
use crate::data::{Dataset, Diagnosis};
use crate::error::{Error, Result};
use crate::evidence::EvidencePattern;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub models: Vec<ModelKind>,
    pub patterns: Vec<EvidencePattern>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub config: ModelConfig,
    /// Also report ROC AUC (debugging only).
    #[serde(default)]
    pub report_auc: bool,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            models: ModelKind::ALL.to_vec(),
            patterns: EvidencePattern::ALL.to_vec(),
            seeds: (0..5).collect(),
            config: ModelConfig::default(),
            report_auc: false,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.patterns.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidArgument("plan needs at least one model, pattern and seed".into()));
        }
        Ok(())
    }

    /// (model, pattern) cells the plan evaluates.
    pub fn cells(&self) -> Vec<(ModelKind, EvidencePattern)> {
        self.models
            .iter()
            .flat_map(|&m| self.patterns.iter().filter(move |p| m.admits(**p)).map(move |&p| (m, p)))
            .collect()
    }
}

/// Outcome of one seed for one table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub ap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: ModelKind,
    pub pattern: EvidencePattern,
    pub diagnosis: Diagnosis,
    /// `None` when every seed failed.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub seeds: Vec<SeedResult>,
}

impl ResultRow {
    fn new(model: ModelKind, pattern: EvidencePattern, diagnosis: Diagnosis, seeds: Vec<SeedResult>) -> Self {
        let ok: Vec<f64> = seeds.iter().filter_map(|s| s.ap).collect();
        let (mean, std) = mean_std(&ok).unzip();
        ResultRow { model, pattern, diagnosis, mean, std, seeds }
    }

    /// False for cells the model cannot produce (text patterns for the
    /// tabular baselines).
    pub fn admissible(&self) -> bool {
        self.model.admits(self.pattern)
    }

    pub fn failed(&self) -> usize {
        self.seeds.iter().filter(|s| s.ap.is_none()).count()
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    // identical seeds (deterministic models) report exactly zero spread
    if xs.iter().all(|&x| x == xs[0]) {
        return Some((xs[0], 0.0));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, model: ModelKind, pattern: EvidencePattern, diagnosis: Diagnosis) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.pattern == pattern && r.diagnosis == diagnosis)
    }

    pub fn mean(&self, model: ModelKind, pattern: EvidencePattern, diagnosis: Diagnosis) -> Option<f64> {
        self.get(model, pattern, diagnosis).and_then(|r| r.mean)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rows)? + "\n")
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:<7} {:<5} {:>16} {:>6}", "model", "pattern", "diag", "AP mean ± std", "failed");
        for r in &self.rows {
            let ap = match (r.mean, r.std) {
                (Some(m), Some(s)) => format!("{m:.4} ± {s:.4}"),
                _ if !r.admissible() => "n/a".to_string(),
                _ => "failed".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<8} {:<7} {:<5} {:>16} {:>6}",
                r.model.label(),
                r.pattern.label(),
                r.diagnosis.name(),
                ap,
                format!("{}/{}", r.failed(), r.seeds.len())
            );
        }
        out
    }
}

type Job = (ModelKind, u64);

fn run_job(
    (model, seed): Job,
    plan: &ExperimentPlan,
    train: &Dataset,
    test: &Dataset,
) -> Result<Vec<(EvidencePattern, Diagnosis, SeedResult)>> {
    let patterns: Vec<EvidencePattern> = plan.patterns.iter().copied().filter(|p| model.admits(*p)).collect();
    let fail = |e: Error| -> Result<Vec<(EvidencePattern, Diagnosis, SeedResult)>> {
        if !e.is_numerical() {
            return Err(e);
        }
        let msg = e.to_string();
        Ok(patterns
            .iter()
            .flat_map(|&p| Diagnosis::ALL.map(|d| (p, d)))
            .map(|(p, d)| (p, d, SeedResult { seed, ap: None, auc: None, error: Some(msg.clone()) }))
            .collect())
    };
    let trained = match TrainedModel::train(model, train, &plan.config, seed) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    let mut out = Vec::new();
    for &p in &patterns {
        for d in Diagnosis::ALL {
            let labels: Vec<u8> = test.records.iter().map(|r| r.diagnosis(d) as u8).collect();
            let scores = match trained.scores(&test.records, p, d) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let ap = average_precision(&scores, &labels)?;
            let auc = if plan.report_auc { Some(roc_auc(&scores, &labels)?) } else { None };
            out.push((p, d, SeedResult { seed, ap: Some(ap), auc, error: None }));
        }
    }
    Ok(out)
}

/// Trains every planned model once per seed on `train`, scores `test` under
/// each admissible evidence pattern and aggregates average precision.
/// (model, seed) jobs run in parallel; rows come out in plan order.
/// Numerical failures are recorded per seed; other errors abort the run.
pub fn run_experiment(plan: &ExperimentPlan, train: &Dataset, test: &Dataset) -> Result<ResultTable> {
    plan.validate()?;
    for d in Diagnosis::ALL {
        if test.positives(d) == 0 {
            return Err(Error::InvalidData(format!("test set has no {} positives", d.name())));
        }
    }
    let jobs: Vec<Job> = plan
        .models
        .iter()
        .flat_map(|&m| plan.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let results: Vec<Result<_>> = jobs.par_iter().map(|&j| run_job(j, plan, train, test)).collect();
    let mut per_job = Vec::with_capacity(jobs.len());
    for r in results {
        per_job.push(r?);
    }

    // Every (model, pattern) pair gets rows; inadmissible ones stay empty.
    let mut rows = Vec::new();
    for &model in &plan.models {
        for &pattern in &plan.patterns {
            for d in Diagnosis::ALL {
                let seeds: Vec<SeedResult> = jobs
                    .iter()
                    .zip(&per_job)
                    .filter(|((m, _), _)| *m == model)
                    .filter_map(|(_, res)| res.iter().find(|(p, dd, _)| *p == pattern && *dd == d))
                    .map(|(_, _, s)| s.clone())
                    .collect();
                rows.push(ResultRow::new(model, pattern, d, seeds));
            }
        }
    }
    Ok(ResultTable { rows })
}
