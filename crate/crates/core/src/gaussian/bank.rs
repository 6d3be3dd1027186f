use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::params::{Covariance, CovarianceKind, GaussianParams};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Minimum number of embeddings a condition needs for its own Gaussian.
pub const MIN_CONDITION_SAMPLES: usize = 2;

/// Which discrete variables the text node is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextParents {
    /// pneu, inf, dysp, cough, nasal: 32 conditions
    Full,
    /// dysp, cough, nasal: 8 conditions
    Ablated,
}

impl TextParents {
    pub fn n_conditions(self) -> usize {
        match self {
            TextParents::Full => 32,
            TextParents::Ablated => 8,
        }
    }

    /// Condition index from diagnosis and symptom levels (binary, row-major
    /// over the parent list, last parent fastest).
    pub fn condition(self, pneu: usize, inf: usize, symptoms: [usize; 3]) -> usize {
        let s = symptoms[0] * 4 + symptoms[1] * 2 + symptoms[2];
        match self {
            TextParents::Full => pneu * 16 + inf * 8 + s,
            TextParents::Ablated => s,
        }
    }

    pub fn parent_names(self) -> &'static [&'static str] {
        match self {
            TextParents::Full => &["pneu", "inf", "dysp", "cough", "nasal"],
            TextParents::Ablated => &["dysp", "cough", "nasal"],
        }
    }

    /// Parent levels of a condition index, in [`Self::parent_names`] order.
    pub fn levels(self, condition: usize) -> Vec<usize> {
        let k = self.parent_names().len();
        (0..k).rev().map(|b| (condition >> b) & 1).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Condition {
    params: Option<GaussianParams>,
    sample_count: usize,
    fallback: bool,
}

/// One Gaussian per parent configuration of the text node, with a pooled
/// Gaussian standing in for conditions with too few embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBank {
    mode: TextParents,
    alpha: f64,
    kind: CovarianceKind,
    conditions: Vec<Condition>,
    pooled: GaussianParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConditionMeta {
    key: Vec<usize>,
    sample_count: usize,
    fallback: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BankManifest {
    mode: TextParents,
    parents: Vec<String>,
    alpha: f64,
    covariance: CovarianceKind,
    dim: usize,
    conditions: Vec<ConditionMeta>,
    pooled_count: usize,
}

impl GaussianBank {
    /// Fits the bank on records that carry text. Only records with observed
    /// symptoms land in a condition bucket; the pooled Gaussian uses every
    /// text-bearing record.
    pub fn fit(data: &Dataset, alpha: f64, mode: TextParents, kind: CovarianceKind) -> Result<Self> {
        let mut buckets: Vec<Vec<&[f64]>> = vec![Vec::new(); mode.n_conditions()];
        let mut pooled: Vec<&[f64]> = Vec::new();
        for r in &data.records {
            let Some(e) = &r.embedding else { continue };
            pooled.push(e.as_slice());
            if let Some(s) = r.symptoms {
                buckets[mode.condition(r.pneu, r.inf, s)].push(e.as_slice());
            }
        }
        if pooled.is_empty() {
            return Err(Error::InvalidData("no records with text to fit the text node".into()));
        }
        let named = |c: usize, e: Error| match e {
            Error::SingularCovariance { .. } => Error::SingularCovariance {
                condition: describe(mode, c),
            },
            other => other,
        };
        let pooled = GaussianParams::fit(&pooled, alpha, kind).map_err(|e| match e {
            Error::SingularCovariance { .. } => Error::SingularCovariance { condition: "the pooled fallback".into() },
            other => other,
        })?;
        let conditions = buckets
            .iter()
            .enumerate()
            .map(|(c, b)| {
                if b.len() < MIN_CONDITION_SAMPLES {
                    let params = if b.is_empty() { None } else { Some(GaussianParams::fit(b, 1.0, kind)?) };
                    Ok(Condition { params, sample_count: b.len(), fallback: true })
                } else {
                    let params = GaussianParams::fit(b, alpha, kind).map_err(|e| named(c, e))?;
                    Ok(Condition { params: Some(params), sample_count: b.len(), fallback: false })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GaussianBank { mode, alpha, kind, conditions, pooled })
    }

    pub fn mode(&self) -> TextParents {
        self.mode
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.pooled.dim()
    }

    pub fn n_conditions(&self) -> usize {
        self.conditions.len()
    }

    pub fn pooled(&self) -> &GaussianParams {
        &self.pooled
    }

    pub fn is_fallback(&self, condition: usize) -> bool {
        self.conditions[condition].fallback
    }

    pub fn sample_count(&self, condition: usize) -> usize {
        self.conditions[condition].sample_count
    }

    /// Parameters used for density queries under a condition.
    pub fn params(&self, condition: usize) -> &GaussianParams {
        let c = &self.conditions[condition];
        if c.fallback {
            &self.pooled
        } else {
            c.params.as_ref().expect("non-fallback condition has parameters")
        }
    }

    pub fn log_density(&self, condition: usize, x: &[f64]) -> Result<f64> {
        self.params(condition).log_density(x)
    }

    /// Replaces every condition's Gaussian (and the fallback) with the same
    /// parameters.
    pub fn uniform(mode: TextParents, params: GaussianParams) -> Self {
        let conditions = (0..mode.n_conditions())
            .map(|_| Condition { params: Some(params.clone()), sample_count: params.sample_count(), fallback: false })
            .collect();
        GaussianBank { mode, alpha: params.alpha(), kind: params.covariance().kind(), conditions, pooled: params }
    }

    /// Bank assembled from explicit per-condition parameters.
    pub fn from_parts(mode: TextParents, per_condition: Vec<GaussianParams>, pooled: GaussianParams) -> Result<Self> {
        if per_condition.len() != mode.n_conditions() {
            return Err(Error::InvalidArgument(format!(
                "expected {} conditions, got {}",
                mode.n_conditions(),
                per_condition.len()
            )));
        }
        let conditions = per_condition
            .into_iter()
            .map(|p| Condition { sample_count: p.sample_count(), params: Some(p), fallback: false })
            .collect();
        Ok(GaussianBank { mode, alpha: pooled.alpha(), kind: pooled.covariance().kind(), conditions, pooled })
    }

    /// Writes moments as little-endian f64 (per condition: mean, then
    /// covariance row-major; pooled last) and a JSON sidecar.
    pub fn save(&self, bin: &Path, sidecar: &Path) -> Result<()> {
        let d = self.dim();
        let cov_len = match self.kind {
            CovarianceKind::Full => d * d,
            CovarianceKind::Diagonal => d,
        };
        let mut bytes = Vec::new();
        let mut push = |p: Option<&GaussianParams>| {
            let (mean, cov) = match p {
                Some(p) => (p.mean().to_vec(), p.covariance().values()),
                None => (vec![0.0; d], vec![0.0; cov_len]),
            };
            for v in mean.iter().chain(&cov) {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        };
        for c in &self.conditions {
            push(c.params.as_ref());
        }
        push(Some(&self.pooled));
        crate::error::write(bin, bytes)?;
        let manifest = BankManifest {
            mode: self.mode,
            parents: self.mode.parent_names().iter().map(|s| s.to_string()).collect(),
            alpha: self.alpha,
            covariance: self.kind,
            dim: d,
            conditions: self
                .conditions
                .iter()
                .enumerate()
                .map(|(i, c)| ConditionMeta { key: self.mode.levels(i), sample_count: c.sample_count, fallback: c.fallback })
                .collect(),
            pooled_count: self.pooled.sample_count(),
        };
        crate::error::write(sidecar, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }

    pub fn load(bin: &Path, sidecar: &Path) -> Result<Self> {
        let m: BankManifest = serde_json::from_str(&crate::error::read_to_string(sidecar)?)?;
        let bytes = crate::error::read(bin)?;
        let d = m.dim;
        let cov_len = match m.covariance {
            CovarianceKind::Full => d * d,
            CovarianceKind::Diagonal => d,
        };
        let block = d + cov_len;
        if m.conditions.len() != m.mode.n_conditions() || bytes.len() != 8 * block * (m.conditions.len() + 1) {
            return Err(Error::Checkpoint("bank file does not match its manifest".into()));
        }
        let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let moments = |i: usize, alpha: f64, n: usize| -> Result<GaussianParams> {
            let b = &values[i * block..(i + 1) * block];
            let cov = match m.covariance {
                CovarianceKind::Full => Covariance::Full(DMatrix::from_row_slice(d, d, &b[d..])),
                CovarianceKind::Diagonal => Covariance::Diagonal(b[d..].to_vec()),
            };
            GaussianParams::from_moments(b[..d].to_vec(), cov, alpha, n)
        };
        let conditions = m
            .conditions
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let params = match (c.fallback, c.sample_count) {
                    (true, 0) => None,
                    (true, n) => Some(moments(i, 1.0, n)?),
                    (false, n) => Some(moments(i, m.alpha, n)?),
                };
                Ok(Condition { params, sample_count: c.sample_count, fallback: c.fallback })
            })
            .collect::<Result<Vec<_>>>()?;
        let pooled = moments(m.conditions.len(), m.alpha, m.pooled_count)?;
        Ok(GaussianBank { mode: m.mode, alpha: m.alpha, kind: m.covariance, conditions, pooled })
    }
}

fn describe(mode: TextParents, condition: usize) -> String {
    let parts: Vec<String> = mode
        .parent_names()
        .iter()
        .zip(mode.levels(condition))
        .map(|(n, l)| format!("{n}={l}"))
        .collect();
    format!("condition ({})", parts.join(", "))
}
