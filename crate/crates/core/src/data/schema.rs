//! Variable names and graph structure of the respiratory-diagnosis use case.

use crate::discrete::{DiscreteBn, Structure, VariableSpec};
use crate::error::{Error, Result};

pub const SEASON: &str = "season";
pub const PNEU: &str = "pneu";
pub const INF: &str = "inf";
pub const DYSP: &str = "dysp";
pub const COUGH: &str = "cough";
pub const NASAL: &str = "nasal";
pub const FEVER: &str = "fever";
pub const PAIN: &str = "pain";

/// Symptoms that appear in the tabular data, in slot order.
pub const SYMPTOMS: [&str; 3] = [DYSP, COUGH, NASAL];
/// Symptoms only ever observed through text.
pub const HIDDEN: [&str; 2] = [FEVER, PAIN];
pub const DIAGNOSES: [&str; 2] = [PNEU, INF];

const DEFAULT_GROUND_TRUTH: &str = include_str!("default_ground_truth.json");

/// Which diagnosis a posterior is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Diagnosis {
    Pneu,
    Inf,
}

impl Diagnosis {
    pub const ALL: [Diagnosis; 2] = [Diagnosis::Pneu, Diagnosis::Inf];

    pub fn name(self) -> &'static str {
        match self {
            Diagnosis::Pneu => PNEU,
            Diagnosis::Inf => INF,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

fn spec(name: &str) -> VariableSpec {
    match name {
        SEASON => VariableSpec::new(SEASON, &["warm", "cold"]).unwrap(),
        FEVER => VariableSpec::new(FEVER, &["none", "low", "high"]).unwrap(),
        other => VariableSpec::binary(other),
    }
}

fn parents(name: &str) -> Vec<String> {
    let p: &[&str] = match name {
        SEASON => &[],
        PNEU | INF => &[SEASON],
        DYSP => &[PNEU],
        COUGH | FEVER | PAIN => &[PNEU, INF],
        NASAL => &[INF],
        _ => unreachable!(),
    };
    p.iter().map(|s| s.to_string()).collect()
}

fn structure_of(names: &[&str]) -> Structure {
    Structure {
        variables: names.iter().map(|n| spec(n)).collect(),
        parents: names.iter().map(|n| parents(n)).collect(),
    }
}

/// The six-variable network over background, diagnoses and tabular symptoms.
pub fn tabular_structure() -> Structure {
    structure_of(&[SEASON, PNEU, INF, DYSP, COUGH, NASAL])
}

/// The tabular network extended with fever and pain.
pub fn extended_structure() -> Structure {
    structure_of(&[SEASON, PNEU, INF, DYSP, COUGH, NASAL, FEVER, PAIN])
}

/// The shipped ground-truth network. Its CPT values are illustrative only.
pub fn default_ground_truth() -> DiscreteBn {
    let bn = DiscreteBn::from_json(DEFAULT_GROUND_TRUTH).expect("shipped ground truth is valid");
    validate_ground_truth(&bn).expect("shipped ground truth has the expected structure");
    bn
}

/// Checks that a network has the eight use-case variables with the expected
/// levels and edges.
pub fn validate_ground_truth(bn: &DiscreteBn) -> Result<()> {
    let expected = extended_structure();
    if bn.variables().len() != expected.variables.len() {
        return Err(Error::InvalidNetwork(format!(
            "ground truth must have {} variables, found {}",
            expected.variables.len(),
            bn.variables().len()
        )));
    }
    for (v, ps) in expected.variables.iter().zip(&expected.parents) {
        let got = bn.variable(&v.name)?;
        if got.levels != v.levels {
            return Err(Error::InvalidNetwork(format!(
                "variable `{}` must have levels {:?}",
                v.name, v.levels
            )));
        }
        let mut have = bn.cpt(&v.name)?.parents.clone();
        let mut want = ps.clone();
        have.sort();
        want.sort();
        if have != want {
            return Err(Error::InvalidNetwork(format!(
                "variable `{}` must have parents {:?}, found {:?}",
                v.name, want, have
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ground_truth_is_marked_and_valid() {
        let gt = default_ground_truth();
        assert!(gt.note().unwrap().starts_with("NON-PAPER"));
        assert_eq!(gt.variable(FEVER).unwrap().cardinality(), 3);
    }

    #[test]
    fn wrong_structure_is_rejected() {
        let bn = tabular_structure().fit(&[]).unwrap();
        assert!(validate_ground_truth(&bn).is_err());
    }
}
