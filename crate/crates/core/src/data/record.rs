
use super::schema::*;
use crate::discrete::Assignment;
use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// One simulated patient encounter.
///
/// Season and diagnoses are always observed. The three tabular symptoms are
/// observed together or masked together. Fever and pain are present only in
/// the extended dataset variant.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub id: u64,
    pub season: usize,
    pub pneu: usize,
    pub inf: usize,
    /// dysp, cough, nasal
    pub symptoms: Option<[usize; 3]>,
    pub fever: Option<usize>,
    pub pain: Option<usize>,
    pub text_present: bool,
    /// `Some` exactly when `text_present`.
    pub embedding: Option<Embedding>,
}

impl PatientRecord {
    pub fn diagnosis(&self, d: Diagnosis) -> usize {
        match d {
            Diagnosis::Pneu => self.pneu,
            Diagnosis::Inf => self.inf,
        }
    }

    pub fn has_hidden(&self) -> bool {
        self.fever.is_some() && self.pain.is_some()
    }

    /// All observed tabular values; fever and pain only if `include_hidden`.
    pub fn assignment(&self, include_hidden: bool) -> Assignment {
        let mut a = Assignment::new()
            .with(SEASON, self.season)
            .with(PNEU, self.pneu)
            .with(INF, self.inf);
        if let Some(s) = self.symptoms {
            for (name, v) in SYMPTOMS.iter().zip(s) {
                a.set(name, v);
            }
        }
        if include_hidden {
            if let Some(f) = self.fever {
                a.set(FEVER, f);
            }
            if let Some(p) = self.pain {
                a.set(PAIN, p);
            }
        }
        a
    }

    /// The record as it appears in the standard variant.
    pub fn without_hidden(&self) -> PatientRecord {
        PatientRecord { fever: None, pain: None, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidRecord { index: self.id as usize, reason });
        if self.season > 1 || self.pneu > 1 || self.inf > 1 {
            return bad("season and diagnoses must be 0 or 1".into());
        }
        if let Some(s) = self.symptoms {
            if s.iter().any(|&v| v > 1) {
                return bad("symptom values must be 0 or 1".into());
            }
        }
        if self.fever.is_some_and(|f| f > 2) || self.pain.is_some_and(|p| p > 1) {
            return bad("fever must be 0..=2 and pain 0 or 1".into());
        }
        if self.fever.is_some() != self.pain.is_some() {
            return bad("fever and pain must be present together".into());
        }
        if self.text_present != self.embedding.is_some() {
            return bad("embedding must be present exactly when text is present".into());
        }
        Ok(())
    }
}

/// Records plus the embedding used for an empty note.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<PatientRecord>,
    pub empty_text: Embedding,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.empty_text.dim()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Embedding a model should see for a record: its own, or the
    /// empty-text vector when no note exists.
    pub fn text_or_empty<'a>(&'a self, r: &'a PatientRecord) -> &'a Embedding {
        r.embedding.as_ref().unwrap_or(&self.empty_text)
    }

    /// Standard variant: fever and pain columns removed.
    pub fn standard(&self) -> Dataset {
        Dataset {
            records: self.records.iter().map(PatientRecord::without_hidden).collect(),
            empty_text: self.empty_text.clone(),
        }
    }

    pub fn assignments(&self, include_hidden: bool) -> Vec<Assignment> {
        self.records.iter().map(|r| r.assignment(include_hidden)).collect()
    }

    pub fn positives(&self, d: Diagnosis) -> usize {
        self.records.iter().filter(|r| r.diagnosis(d) == 1).count()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        for r in &self.records {
            r.validate()?;
            if let Some(e) = &r.embedding {
                if e.dim() != d {
                    return Err(Error::DimensionMismatch { expected: d, actual: e.dim() });
                }
            }
        }
        Ok(())
    }
}
