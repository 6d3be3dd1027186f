use serde::{Deserialize, Serialize};

use crate::data::schema::{FEVER, PAIN, SEASON, SYMPTOMS};
use crate::data::{Dataset, PatientRecord};
use crate::discrete::Assignment;
use crate::embedding::Embedding;

/// Observed tabular values plus, optionally, a text embedding.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evidence {
    pub tabular: Assignment,
    pub text: Option<Embedding>,
}

impl Evidence {
    pub fn new(tabular: Assignment, text: Option<Embedding>) -> Self {
        Evidence { tabular, text }
    }

    /// True when every tabular symptom is part of the evidence.
    pub fn all_symptoms(&self) -> bool {
        SYMPTOMS.iter().all(|s| self.tabular.contains(s))
    }

    pub fn no_symptoms(&self) -> bool {
        SYMPTOMS.iter().all(|s| !self.tabular.contains(s))
    }
}

/// Which evidence a posterior conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvidencePattern {
    /// background, symptoms and text
    #[serde(rename = "B+S+T")]
    Bst,
    /// background and symptoms
    #[serde(rename = "B+S")]
    Bs,
    /// background and text
    #[serde(rename = "B+T")]
    Bt,
}

impl EvidencePattern {
    pub const ALL: [EvidencePattern; 3] = [EvidencePattern::Bst, EvidencePattern::Bs, EvidencePattern::Bt];

    pub fn label(self) -> &'static str {
        match self {
            EvidencePattern::Bst => "B+S+T",
            EvidencePattern::Bs => "B+S",
            EvidencePattern::Bt => "B+T",
        }
    }

    pub fn uses_symptoms(self) -> bool {
        self != EvidencePattern::Bt
    }

    pub fn uses_text(self) -> bool {
        self != EvidencePattern::Bs
    }

    /// Evidence for a record under this pattern. Fever and pain are added
    /// (with the symptoms) only when `with_hidden` is set. Text is the
    /// record's embedding, absent when the record has no note.
    pub fn evidence(self, record: &PatientRecord, with_hidden: bool) -> Evidence {
        let mut a = Assignment::new().with(SEASON, record.season);
        if self.uses_symptoms() {
            if let Some(s) = record.symptoms {
                for (name, v) in SYMPTOMS.iter().zip(s) {
                    a.set(name, v);
                }
            }
            if with_hidden {
                if let (Some(f), Some(p)) = (record.fever, record.pain) {
                    a.set(FEVER, f);
                    a.set(PAIN, p);
                }
            }
        }
        let text = if self.uses_text() { record.embedding.clone() } else { None };
        Evidence { tabular: a, text }
    }

    /// Like [`Self::evidence`] but with the dataset's empty-text vector in
    /// place of a missing note.
    pub fn evidence_with_empty(self, record: &PatientRecord, data: &Dataset) -> Evidence {
        let mut e = self.evidence(record, false);
        if self.uses_text() && e.text.is_none() {
            e.text = Some(data.empty_text.clone());
        }
        e
    }
}

impl std::str::FromStr for EvidencePattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bst" | "b+s+t" => Ok(EvidencePattern::Bst),
            "bs" | "b+s" => Ok(EvidencePattern::Bs),
            "bt" | "b+t" => Ok(EvidencePattern::Bt),
            other => Err(format!("unknown evidence pattern `{other}` (expected bst, bs or bt)")),
        }
    }
}
