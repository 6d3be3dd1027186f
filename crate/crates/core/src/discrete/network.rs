use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cpt::{config_index, Cpt, FamilyCounts};
use super::variable::{Assignment, VariableSpec};
use crate::error::{Error, Result};

/// DAG over named variables: each variable with its ordered parent list.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub variables: Vec<VariableSpec>,
    pub parents: Vec<Vec<String>>,
}

impl Structure {
    /// Fits every CPT with add-one smoothed maximum likelihood.
    pub fn fit(&self, records: &[Assignment]) -> Result<DiscreteBn> {
        let counts = self.count(records)?;
        let cpts = counts.iter().map(FamilyCounts::to_cpt_k2).collect();
        DiscreteBn::new(self.variables.clone(), cpts)
    }

    /// Per-family counts, in variable order.
    pub fn count(&self, records: &[Assignment]) -> Result<Vec<FamilyCounts>> {
        let by_name: HashMap<&str, &VariableSpec> =
            self.variables.iter().map(|v| (v.name.as_str(), v)).collect();
        let mut families = Vec::with_capacity(self.variables.len());
        for (v, ps) in self.variables.iter().zip(&self.parents) {
            let parents = ps
                .iter()
                .map(|p| {
                    by_name
                        .get(p.as_str())
                        .copied()
                        .ok_or_else(|| Error::UnknownVariable(p.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            families.push(FamilyCounts::new(v, &parents));
        }
        for (i, r) in records.iter().enumerate() {
            for f in families.iter_mut() {
                f.add(i, r)?;
            }
        }
        Ok(families)
    }
}

/// A discrete Bayesian network: one CPT per variable over an acyclic graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBn {
    variables: Vec<VariableSpec>,
    // cpts[i] belongs to variables[i]
    cpts: Vec<Cpt>,
    parent_idx: Vec<Vec<usize>>,
    order: Vec<usize>,
    index: HashMap<String, usize>,
    note: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    variables: Vec<VariableSpec>,
    cpts: Vec<Cpt>,
}

impl DiscreteBn {
    /// Builds and validates a network. `cpts` may be in any order.
    pub fn new(variables: Vec<VariableSpec>, cpts: Vec<Cpt>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            v.validate()?;
            if index.insert(v.name.clone(), i).is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate variable `{}`",
                    v.name
                )));
            }
        }
        let mut slots: Vec<Option<Cpt>> = vec![None; variables.len()];
        for cpt in cpts {
            let &i = index
                .get(&cpt.child)
                .ok_or_else(|| Error::UnknownVariable(cpt.child.clone()))?;
            if slots[i].is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "variable `{}` has more than one cpt",
                    cpt.child
                )));
            }
            slots[i] = Some(cpt);
        }
        let cpts = slots
            .into_iter()
            .zip(&variables)
            .map(|(c, v)| {
                c.ok_or_else(|| Error::InvalidNetwork(format!("variable `{}` has no cpt", v.name)))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut parent_idx = Vec::with_capacity(cpts.len());
        for (i, cpt) in cpts.iter().enumerate() {
            let ps = cpt
                .parents
                .iter()
                .map(|p| {
                    index
                        .get(p)
                        .copied()
                        .ok_or_else(|| Error::UnknownVariable(p.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            if ps.contains(&i) {
                return Err(Error::InvalidNetwork(format!(
                    "variable `{}` is its own parent",
                    cpt.child
                )));
            }
            let cards: Vec<usize> = ps.iter().map(|&p| variables[p].cardinality()).collect();
            cpt.validate(variables[i].cardinality(), &cards, 1e-9)?;
            parent_idx.push(ps);
        }
        let order = topological_order(&parent_idx).ok_or_else(|| {
            Error::InvalidNetwork("graph contains a directed cycle".into())
        })?;
        Ok(DiscreteBn {
            variables,
            cpts,
            parent_idx,
            order,
            index,
            note: None,
        })
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, name: &str) -> Result<&Cpt> {
        Ok(&self.cpts[self.var_index(name)?])
    }

    pub fn parents_of(&self, i: usize) -> &[usize] {
        &self.parent_idx[i]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn variable(&self, name: &str) -> Result<&VariableSpec> {
        Ok(&self.variables[self.var_index(name)?])
    }

    pub fn structure(&self) -> Structure {
        Structure {
            variables: self.variables.clone(),
            parents: self.cpts.iter().map(|c| c.parents.clone()).collect(),
        }
    }

    /// Network restricted to the named variables (which must be closed
    /// under parents), sharing their CPTs.
    pub fn subnetwork(&self, keep: &[&str]) -> Result<DiscreteBn> {
        let mut vars = Vec::new();
        let mut cpts = Vec::new();
        for &name in keep {
            let i = self.var_index(name)?;
            vars.push(self.variables[i].clone());
            cpts.push(self.cpts[i].clone());
        }
        DiscreteBn::new(vars, cpts)
    }

    /// Dense level vector (in variable order) for a full assignment.
    pub fn dense(&self, full: &Assignment) -> Result<Vec<usize>> {
        let missing: Vec<String> = self
            .variables
            .iter()
            .filter(|v| !full.contains(&v.name))
            .map(|v| v.name.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingVariables(missing));
        }
        let partial = self.partial(full)?;
        Ok(partial.into_iter().map(|v| v.unwrap()).collect())
    }

    /// Dense optional-level vector for a partial assignment. Names the
    /// network does not know are rejected.
    pub fn partial(&self, evidence: &Assignment) -> Result<Vec<Option<usize>>> {
        let mut out = vec![None; self.variables.len()];
        for (name, level) in evidence.iter() {
            let i = self.var_index(name)?;
            let card = self.variables[i].cardinality();
            if level >= card {
                return Err(Error::LevelOutOfRange {
                    variable: name.to_string(),
                    level,
                    cardinality: card,
                });
            }
            out[i] = Some(level);
        }
        Ok(out)
    }

    /// `P(child_i = levels[i] | parents)` for one variable.
    pub fn factor(&self, i: usize, levels: &[usize]) -> f64 {
        let cards = self.parent_idx[i]
            .iter()
            .map(|&p| self.variables[p].cardinality());
        let row = self.parent_idx[i]
            .iter()
            .zip(cards)
            .fold(0, |acc, (&p, c)| acc * c + levels[p]);
        self.cpts[i].rows[row][levels[i]]
    }

    /// Joint probability of a dense full assignment.
    pub fn joint_dense(&self, levels: &[usize]) -> f64 {
        (0..self.variables.len()).map(|i| self.factor(i, levels)).product()
    }

    /// Log joint probability of a dense full assignment.
    pub fn log_joint_dense(&self, levels: &[usize]) -> f64 {
        (0..self.variables.len())
            .map(|i| self.factor(i, levels).ln())
            .sum()
    }

    /// Product of all CPT entries selected by a full assignment.
    pub fn joint_prob(&self, full: &Assignment) -> Result<f64> {
        Ok(self.joint_dense(&self.dense(full)?))
    }

    /// Draws `n` samples top-down in topological order.
    pub fn ancestral_sample(&self, n: usize, seed: u64) -> Vec<Assignment> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| self.to_assignment(&self.sample_dense(&mut rng)))
            .collect()
    }

    pub fn sample_dense<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut levels = vec![0; self.variables.len()];
        for &i in &self.order {
            let cards: Vec<usize> = self.parent_idx[i]
                .iter()
                .map(|&p| self.variables[p].cardinality())
                .collect();
            let pl: Vec<usize> = self.parent_idx[i].iter().map(|&p| levels[p]).collect();
            let row = &self.cpts[i].rows[config_index(&pl, &cards)];
            levels[i] = draw_categorical(row, rng.random::<f64>());
        }
        levels
    }

    pub fn to_assignment(&self, levels: &[usize]) -> Assignment {
        self.variables
            .iter()
            .zip(levels)
            .map(|(v, &l)| (v.name.as_str(), l))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = NetworkDoc {
            note: self.note.clone(),
            variables: self.variables.clone(),
            cpts: self.cpts.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDoc = serde_json::from_str(text)?;
        let bn = DiscreteBn::new(doc.variables, doc.cpts)?;
        Ok(match doc.note {
            Some(n) => bn.with_note(n),
            None => bn,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::error::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&crate::error::read_to_string(path)?)
    }
}

fn draw_categorical(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding gap at the top; take the last non-zero level
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

fn topological_order(parents: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &c in children[i].iter().rev() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(p_s_given_d: [f64; 2]) -> DiscreteBn {
        let d = VariableSpec::binary("d");
        let s = VariableSpec::binary("s");
        DiscreteBn::new(
            vec![d, s],
            vec![
                Cpt {
                    child: "s".into(),
                    parents: vec!["d".into()],
                    rows: p_s_given_d.iter().map(|&p| vec![1.0 - p, p]).collect(),
                },
                Cpt {
                    child: "d".into(),
                    parents: vec![],
                    rows: vec![vec![0.5, 0.5]],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_cycles_and_missing_cpts() {
        let a = VariableSpec::binary("a");
        let b = VariableSpec::binary("b");
        let row = vec![vec![0.5, 0.5]; 2];
        let cyc = DiscreteBn::new(
            vec![a.clone(), b.clone()],
            vec![
                Cpt { child: "a".into(), parents: vec!["b".into()], rows: row.clone() },
                Cpt { child: "b".into(), parents: vec!["a".into()], rows: row },
            ],
        );
        assert!(matches!(cyc, Err(Error::InvalidNetwork(_))));
        let missing = DiscreteBn::new(
            vec![a, b],
            vec![Cpt { child: "a".into(), parents: vec![], rows: vec![vec![0.5, 0.5]] }],
        );
        assert!(missing.is_err());
    }

    #[test]
    fn rejects_rows_not_summing_to_one() {
        let a = VariableSpec::binary("a");
        let bad = DiscreteBn::new(
            vec![a],
            vec![Cpt { child: "a".into(), parents: vec![], rows: vec![vec![0.5, 0.6]] }],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn joint_of_deterministic_chain() {
        let bn = chain([0.0, 1.0]);
        let full = Assignment::new().with("d", 1).with("s", 1);
        assert_eq!(bn.joint_prob(&full).unwrap(), 0.5);
        let partial = Assignment::new().with("d", 1);
        match bn.joint_prob(&partial) {
            Err(Error::MissingVariables(v)) => assert_eq!(v, vec!["s".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parents_precede_children() {
        let bn = chain([0.2, 0.7]);
        assert_eq!(bn.topological_order(), &[0, 1]);
    }

    #[test]
    fn deterministic_sampling_is_forced() {
        let d = VariableSpec::binary("d");
        let s = VariableSpec::binary("s");
        let bn = DiscreteBn::new(
            vec![d, s],
            vec![
                Cpt { child: "d".into(), parents: vec![], rows: vec![vec![0.0, 1.0]] },
                Cpt { child: "s".into(), parents: vec!["d".into()], rows: vec![vec![0.3, 0.7], vec![1.0, 0.0]] },
            ],
        )
        .unwrap();
        let forced = Assignment::new().with("d", 1).with("s", 0);
        assert!(bn.ancestral_sample(500, 3).iter().all(|a| *a == forced));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let bn = chain([0.2, 0.7]);
        assert_eq!(bn.ancestral_sample(50, 11), bn.ancestral_sample(50, 11));
        assert_ne!(bn.ancestral_sample(50, 11), bn.ancestral_sample(50, 12));
    }

    #[test]
    fn fair_coin_frequency_within_three_sigma() {
        let bn = chain([0.2, 0.7]);
        let n = 100_000;
        let ones = bn
            .ancestral_sample(n, 2024)
            .iter()
            .filter(|a| a.get("d") == Some(1))
            .count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((ones - n as f64 / 2.0).abs() < 3.0 * sd, "ones = {ones}");
    }

    #[test]
    fn json_roundtrip() {
        let bn = chain([0.2, 0.7]).with_note("toy");
        let back = DiscreteBn::from_json(&bn.to_json().unwrap()).unwrap();
        assert_eq!(back, bn);
        let text = bn.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["cpts"][0]["child"], "d");
        assert_eq!(v["variables"][1]["levels"][1], "yes");
    }

    #[test]
    fn structure_fit_recovers_known_cpt() {
        let truth = chain([0.15, 0.8]);
        let samples = truth.ancestral_sample(100_000, 5);
        let fitted = truth.structure().fit(&samples).unwrap();
        for (a, b) in fitted.cpts().iter().zip(truth.cpts()) {
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                let s: f64 = ra.iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
                for (x, y) in ra.iter().zip(rb) {
                    assert!((x - y).abs() < 0.02);
                }
            }
        }
    }
}
