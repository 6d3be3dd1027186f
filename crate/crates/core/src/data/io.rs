//! JSON-lines persistence for datasets and embedding tables.
//!
//! Dataset rows look like
//! `{"id":0,"season":"warm","pneu":0,"inf":1,"dysp":0,"cough":1,"nasal":null,"text_present":true}`
//! with `fever` (`"none"|"low"|"high"`) and `pain` added in the extended
//! variant. Embedding rows are `{"id":0,"vec":[...]}`, plus one row with
//! id `"__empty__"` holding the empty-text vector.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embedder::EmbeddingTable;
use super::record::{Dataset, PatientRecord};
use crate::embedding::Embedding;
use crate::error::{Error, Result};

pub const EMPTY_ID: &str = "__empty__";

const SEASONS: [&str; 2] = ["warm", "cold"];
const FEVERS: [&str; 3] = ["none", "low", "high"];

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    id: u64,
    season: String,
    pneu: usize,
    inf: usize,
    dysp: Option<usize>,
    cough: Option<usize>,
    nasal: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fever: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pain: Option<usize>,
    text_present: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum EmbeddingId {
    Record(u64),
    Named(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingRow {
    id: EmbeddingId,
    vec: Vec<f64>,
}

fn label_index(labels: &[&str], value: &str, field: &str, line: usize) -> Result<usize> {
    labels.iter().position(|l| *l == value).ok_or_else(|| Error::InvalidRecord {
        index: line,
        reason: format!("unknown {field} level `{value}`"),
    })
}

fn to_row(r: &PatientRecord, include_hidden: bool) -> RecordRow {
    let s = r.symptoms;
    RecordRow {
        id: r.id,
        season: SEASONS[r.season].to_string(),
        pneu: r.pneu,
        inf: r.inf,
        dysp: s.map(|s| s[0]),
        cough: s.map(|s| s[1]),
        nasal: s.map(|s| s[2]),
        fever: r.fever.filter(|_| include_hidden).map(|f| FEVERS[f].to_string()),
        pain: r.pain.filter(|_| include_hidden),
        text_present: r.text_present,
    }
}

fn from_row(row: RecordRow, line: usize) -> Result<PatientRecord> {
    let symptoms = match (row.dysp, row.cough, row.nasal) {
        (Some(a), Some(b), Some(c)) => Some([a, b, c]),
        (None, None, None) => None,
        _ => {
            return Err(Error::InvalidRecord {
                index: line,
                reason: "symptoms must be observed all together or not at all".into(),
            })
        }
    };
    let fever = row
        .fever
        .as_deref()
        .map(|f| label_index(&FEVERS, f, "fever", line))
        .transpose()?;
    Ok(PatientRecord {
        id: row.id,
        season: label_index(&SEASONS, &row.season, "season", line)?,
        pneu: row.pneu,
        inf: row.inf,
        symptoms,
        fever,
        pain: row.pain,
        text_present: row.text_present,
        embedding: None,
    })
}

/// Parses one dataset row. Unknown fields are ignored.
pub fn parse_record(json: &str) -> Result<PatientRecord> {
    let record = from_row(serde_json::from_str(json)?, 0)?;
    record.validate_fields(0)?;
    Ok(record)
}

/// Writes one JSON object per record. Fever and pain are written only when
/// `include_hidden` is set and the record carries them.
pub fn write_records(path: &Path, records: &[PatientRecord], include_hidden: bool) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&to_row(r, include_hidden))?);
        out.push('\n');
    }
    crate::error::write(path, out)?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<PatientRecord>> {
    let text = crate::error::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let row: RecordRow = serde_json::from_str(l).map_err(|e| Error::InvalidRecord {
                index: i,
                reason: e.to_string(),
            })?;
            let rec = from_row(row, i)?;
            rec.validate_fields(i)?;
            Ok(rec)
        })
        .collect()
}

impl PatientRecord {
    fn validate_fields(&self, line: usize) -> Result<()> {
        let probe = PatientRecord {
            embedding: self.text_present.then(|| Embedding::zeros(1)),
            ..self.clone()
        };
        probe.validate().map_err(|e| match e {
            Error::InvalidRecord { reason, .. } => Error::InvalidRecord { index: line, reason },
            other => other,
        })
    }
}

/// Writes the empty-text row followed by every text-bearing record of the
/// given datasets, ordered by id.
pub fn write_embeddings(path: &Path, datasets: &[&Dataset]) -> Result<()> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::InvalidArgument("no datasets to write".into()))?;
    let mut rows: Vec<(u64, &Embedding)> = datasets
        .iter()
        .flat_map(|d| d.records.iter())
        .filter_map(|r| r.embedding.as_ref().map(|e| (r.id, e)))
        .collect();
    rows.sort_by_key(|(id, _)| *id);
    let mut out = String::new();
    let mut line = |id: EmbeddingId, v: &Embedding| -> Result<()> {
        let row = EmbeddingRow { id, vec: v.as_slice().to_vec() };
        writeln!(out, "{}", serde_json::to_string(&row)?).expect("write to string");
        Ok(())
    };
    line(EmbeddingId::Named(EMPTY_ID.into()), &first.empty_text)?;
    for (id, e) in rows {
        line(EmbeddingId::Record(id), e)?;
    }
    crate::error::write(path, out)?;
    Ok(())
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = crate::error::read_to_string(path)?;
    let mut empty = None;
    let mut by_id = HashMap::new();
    let mut dim = None;
    for (i, l) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: EmbeddingRow = serde_json::from_str(l)
            .map_err(|e| Error::InvalidData(format!("embedding line {}: {e}", i + 1)))?;
        let d = *dim.get_or_insert(row.vec.len());
        if row.vec.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: row.vec.len() });
        }
        let v = Embedding::new(row.vec)?;
        match row.id {
            EmbeddingId::Record(id) => {
                if by_id.insert(id, v).is_some() {
                    return Err(Error::InvalidData(format!("duplicate embedding id {id}")));
                }
            }
            EmbeddingId::Named(name) if name == EMPTY_ID => empty = Some(v),
            EmbeddingId::Named(name) => {
                return Err(Error::InvalidData(format!("unknown embedding id `{name}`")))
            }
        }
    }
    let empty = empty.ok_or_else(|| Error::InvalidData(format!("embedding file lacks the `{EMPTY_ID}` entry")))?;
    Ok(EmbeddingTable { empty, by_id })
}

/// Joins a dataset file with an embedding file by id and validates the
/// result.
pub fn load_external(records_path: &Path, embeddings_path: &Path) -> Result<Dataset> {
    let table = read_embeddings(embeddings_path)?;
    let mut records = read_records(records_path)?;
    for r in &mut records {
        let entry = table.by_id.get(&r.id);
        if r.text_present {
            let e = entry.ok_or_else(|| Error::InvalidData(format!("no embedding for record {}", r.id)))?;
            r.embedding = Some(e.clone());
        } else if entry.is_some_and(|e| *e != table.empty) {
            return Err(Error::InvalidData(format!(
                "record {} has no text but a non-empty embedding",
                r.id
            )));
        }
    }
    let ds = Dataset { records, empty_text: table.empty };
    ds.validate()?;
    Ok(ds)
}
