use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A categorical variable with ordered level labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub levels: Vec<String>,
}

impl VariableSpec {
    pub fn new<S: Into<String>>(name: S, levels: &[&str]) -> Result<Self> {
        let spec = VariableSpec {
            name: name.into(),
            levels: levels.iter().map(|l| l.to_string()).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn binary<S: Into<String>>(name: S) -> Self {
        VariableSpec {
            name: name.into(),
            levels: vec!["no".into(), "yes".into()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::InvalidNetwork("variable with empty name".into()));
        }
        if self.levels.len() < 2 {
            return Err(Error::InvalidNetwork(format!(
                "variable `{}` needs at least two levels",
                self.name
            )));
        }
        for (i, l) in self.levels.iter().enumerate() {
            if self.levels[..i].contains(l) {
                return Err(Error::InvalidNetwork(format!(
                    "variable `{}` has duplicate level `{l}`",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn cardinality(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, label: &str) -> Result<usize> {
        self.levels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLevel {
                variable: self.name.clone(),
                label: label.to_string(),
            })
    }
}

/// A (possibly partial) map from variable name to level index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment(BTreeMap<String, usize>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, level: usize) -> Self {
        self.set(name, level);
        self
    }

    pub fn set(&mut self, name: &str, level: usize) {
        self.0.insert(name.to_string(), level);
    }

    pub fn remove(&mut self, name: &str) -> Option<usize> {
        self.0.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl<'a> FromIterator<(&'a str, usize)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (&'a str, usize)>>(iter: I) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_and_unary_levels() {
        assert!(VariableSpec::new("x", &["a", "a"]).is_err());
        assert!(VariableSpec::new("x", &["a"]).is_err());
        let fever = VariableSpec::new("fever", &["none", "low", "high"]).unwrap();
        assert_eq!(fever.cardinality(), 3);
        assert_eq!(fever.level_index("high").unwrap(), 2);
        assert!(matches!(
            fever.level_index("extreme"),
            Err(Error::UnknownLevel { .. })
        ));
    }
}
