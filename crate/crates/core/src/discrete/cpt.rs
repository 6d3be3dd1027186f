use serde::{Deserialize, Serialize};

use super::variable::{Assignment, VariableSpec};
use crate::error::{Error, Result};

/// Conditional probability table `P(child | parents)`.
///
/// Rows are indexed row-major over the parent levels, the last parent
/// varying fastest; columns are child levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub child: String,
    pub parents: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Row index of a parent configuration given parent cardinalities.
pub fn config_index(levels: &[usize], cards: &[usize]) -> usize {
    levels
        .iter()
        .zip(cards)
        .fold(0, |acc, (&l, &c)| acc * c + l)
}

/// Inverse of [`config_index`].
pub fn config_levels(mut index: usize, cards: &[usize]) -> Vec<usize> {
    let mut out = vec![0; cards.len()];
    for (slot, &c) in out.iter_mut().zip(cards).rev() {
        *slot = index % c;
        index /= c;
    }
    out
}

impl Cpt {
    pub fn uniform(child: &VariableSpec, parents: &[&VariableSpec]) -> Self {
        let k = child.cardinality();
        let n_rows: usize = parents.iter().map(|p| p.cardinality()).product();
        Cpt {
            child: child.name.clone(),
            parents: parents.iter().map(|p| p.name.clone()).collect(),
            rows: vec![vec![1.0 / k as f64; k]; n_rows],
        }
    }

    pub fn row(&self, parent_config: usize) -> &[f64] {
        &self.rows[parent_config]
    }

    /// Checks shape against the given cardinalities and that rows are
    /// distributions within `tol`.
    pub fn validate(&self, child_card: usize, parent_cards: &[usize], tol: f64) -> Result<()> {
        let expected: usize = parent_cards.iter().product();
        if self.rows.len() != expected {
            return Err(Error::InvalidNetwork(format!(
                "cpt for `{}` has {} rows, expected {expected}",
                self.child,
                self.rows.len()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != child_card {
                return Err(Error::InvalidNetwork(format!(
                    "cpt for `{}` row {i} has {} entries, expected {child_card}",
                    self.child,
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                return Err(Error::InvalidNetwork(format!(
                    "cpt for `{}` row {i} has entries outside [0, 1]",
                    self.child
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::InvalidNetwork(format!(
                    "cpt for `{}` row {i} sums to {s}",
                    self.child
                )));
            }
        }
        Ok(())
    }
}

/// Co-occurrence counts for one family (child + parents).
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCounts {
    pub child: VariableSpec,
    pub parents: Vec<VariableSpec>,
    pub counts: Vec<Vec<f64>>,
}

impl FamilyCounts {
    pub fn new(child: &VariableSpec, parents: &[&VariableSpec]) -> Self {
        let n_rows: usize = parents.iter().map(|p| p.cardinality()).product();
        FamilyCounts {
            child: child.clone(),
            parents: parents.iter().map(|&p| p.clone()).collect(),
            counts: vec![vec![0.0; child.cardinality()]; n_rows],
        }
    }

    fn parent_cards(&self) -> Vec<usize> {
        self.parents.iter().map(|p| p.cardinality()).collect()
    }

    /// Adds one record. Records that do not observe the child and every
    /// parent are skipped; returns whether the record was counted.
    pub fn add(&mut self, index: usize, record: &Assignment) -> Result<bool> {
        let check = |spec: &VariableSpec, level: usize| {
            if level >= spec.cardinality() {
                Err(Error::InvalidRecord {
                    index,
                    reason: format!(
                        "level {level} out of range for `{}` (cardinality {})",
                        spec.name,
                        spec.cardinality()
                    ),
                })
            } else {
                Ok(level)
            }
        };
        let Some(child) = record.get(&self.child.name) else {
            return Ok(false);
        };
        let child = check(&self.child, child)?;
        let mut levels = Vec::with_capacity(self.parents.len());
        for p in &self.parents {
            match record.get(&p.name) {
                Some(l) => levels.push(check(p, l)?),
                None => return Ok(false),
            }
        }
        let row = config_index(&levels, &self.parent_cards());
        self.counts[row][child] += 1.0;
        Ok(true)
    }

    /// Add-one (K2) smoothed maximum-likelihood table.
    pub fn to_cpt_k2(&self) -> Cpt {
        let k = self.child.cardinality() as f64;
        let rows = self
            .counts
            .iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                let mut r: Vec<f64> = row.iter().map(|c| (c + 1.0) / (total + k)).collect();
                let s: f64 = r.iter().sum();
                r.iter_mut().for_each(|p| *p /= s);
                r
            })
            .collect();
        Cpt {
            child: self.child.name.clone(),
            parents: self.parents.iter().map(|p| p.name.clone()).collect(),
            rows,
        }
    }
}

/// Maximum-likelihood CPT with add-one smoothing over the records that
/// observe the child and all of its parents.
pub fn fit_cpt_mle_k2(
    records: &[Assignment],
    child: &VariableSpec,
    parents: &[&VariableSpec],
) -> Result<Cpt> {
    let mut counts = FamilyCounts::new(child, parents);
    for (i, r) in records.iter().enumerate() {
        counts.add(i, r)?;
    }
    Ok(counts.to_cpt_k2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn yes_no(name: &str) -> VariableSpec {
        VariableSpec::binary(name)
    }

    #[test]
    fn add_one_smoothing_root() {
        let x = yes_no("x");
        let recs: Vec<Assignment> = [1, 1, 1, 0]
            .iter()
            .map(|&v| Assignment::new().with("x", v))
            .collect();
        let cpt = fit_cpt_mle_k2(&recs, &x, &[]).unwrap();
        assert!((cpt.rows[0][1] - 4.0 / 6.0).abs() < 1e-15);
        assert!((cpt.rows[0][0] - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn unseen_parent_config_is_uniform() {
        let d = yes_no("d");
        let s = yes_no("s");
        let recs = vec![
            Assignment::new().with("d", 0).with("s", 1),
            Assignment::new().with("d", 0).with("s", 1),
        ];
        let cpt = fit_cpt_mle_k2(&recs, &s, &[&d]).unwrap();
        assert_eq!(cpt.rows[1], vec![0.5, 0.5]);
        assert!((cpt.rows[0][1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn masked_child_or_parent_contributes_nothing() {
        let d = yes_no("d");
        let s = yes_no("s");
        let mut counts = FamilyCounts::new(&s, &[&d]);
        assert!(!counts.add(0, &Assignment::new().with("d", 1)).unwrap());
        assert!(!counts.add(1, &Assignment::new().with("s", 1)).unwrap());
        assert!(counts.counts.iter().flatten().all(|&c| c == 0.0));
    }

    #[test]
    fn out_of_range_level_names_record() {
        let x = yes_no("x");
        let recs = vec![Assignment::new().with("x", 0), Assignment::new().with("x", 5)];
        match fit_cpt_mle_k2(&recs, &x, &[]) {
            Err(Error::InvalidRecord { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_index_roundtrip() {
        let cards = [2, 3, 2];
        for i in 0..12 {
            assert_eq!(config_index(&config_levels(i, &cards), &cards), i);
        }
        assert_eq!(config_index(&[1, 0, 1], &cards), 7);
    }
}
