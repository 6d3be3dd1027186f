//! Exact posterior inference.
//!
//! [`DiscreteBn::posterior`] runs variable elimination with a greedy
//! min-weight ordering; [`DiscreteBn::posterior_by_enumeration`] sums the
//! full joint and is the reference the former must agree with.

use super::network::DiscreteBn;
use super::variable::Assignment;
use crate::error::{Error, Result};

/// Dense table over a set of variables, last variable varying fastest.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.vars.len()];
        for i in (0..self.vars.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.cards[i + 1];
        }
        s
    }

    fn weight(&self) -> usize {
        self.values.len()
    }

    /// Fixes a variable to one level, dropping it from the scope.
    fn reduce(&self, var: usize, level: usize) -> Factor {
        let Some(pos) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let strides = self.strides();
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let n: usize = cards.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut idx = vec![0usize; vars.len()];
        for _ in 0..n {
            let mut off = level * strides[pos];
            for (k, &l) in idx.iter().enumerate() {
                let orig = if k < pos { k } else { k + 1 };
                off += l * strides[orig];
            }
            values.push(self.values[off]);
            increment(&mut idx, &cards);
        }
        Factor { vars, cards, values }
    }

    fn product(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.vars.iter().zip(&other.cards) {
            if !vars.contains(&v) {
                vars.push(v);
                cards.push(c);
            }
        }
        let map_a: Vec<usize> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|u| u == v).unwrap())
            .collect();
        let map_b: Vec<usize> = other
            .vars
            .iter()
            .map(|v| vars.iter().position(|u| u == v).unwrap())
            .collect();
        let (sa, sb) = (self.strides(), other.strides());
        let n: usize = cards.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut idx = vec![0usize; vars.len()];
        for _ in 0..n {
            let a: usize = map_a.iter().zip(&sa).map(|(&m, &s)| idx[m] * s).sum();
            let b: usize = map_b.iter().zip(&sb).map(|(&m, &s)| idx[m] * s).sum();
            values.push(self.values[a] * other.values[b]);
            increment(&mut idx, &cards);
        }
        Factor { vars, cards, values }
    }

    fn sum_out(&self, var: usize) -> Factor {
        let pos = self.vars.iter().position(|&v| v == var).unwrap();
        let strides = self.strides();
        let card = self.cards[pos];
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let n: usize = cards.iter().product();
        let mut values = Vec::with_capacity(n);
        let mut idx = vec![0usize; vars.len()];
        for _ in 0..n {
            let mut base = 0;
            for (k, &l) in idx.iter().enumerate() {
                let orig = if k < pos { k } else { k + 1 };
                base += l * strides[orig];
            }
            values.push((0..card).map(|l| self.values[base + l * strides[pos]]).sum());
            increment(&mut idx, &cards);
        }
        Factor { vars, cards, values }
    }
}

fn increment(idx: &mut [usize], cards: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < cards[k] {
            return;
        }
        idx[k] = 0;
    }
}

fn normalize(mut dist: Vec<f64>) -> Result<Vec<f64>> {
    let z: f64 = dist.iter().sum();
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::ZeroEvidence);
    }
    dist.iter_mut().for_each(|p| *p /= z);
    Ok(dist)
}

impl DiscreteBn {
    fn check_query(&self, query: &str, evidence: &Assignment) -> Result<(usize, Vec<Option<usize>>)> {
        let q = self.var_index(query)?;
        if evidence.contains(query) {
            return Err(Error::QueryInEvidence(query.to_string()));
        }
        Ok((q, self.partial(evidence)?))
    }

    /// `P(query | evidence)` by variable elimination.
    pub fn posterior(&self, query: &str, evidence: &Assignment) -> Result<Vec<f64>> {
        let (q, observed) = self.check_query(query, evidence)?;
        let n = self.variables().len();
        let mut factors: Vec<Factor> = (0..n)
            .map(|i| {
                let mut vars = self.parents_of(i).to_vec();
                vars.push(i);
                let cards = vars.iter().map(|&v| self.variables()[v].cardinality()).collect();
                let values = self.cpts()[i].rows.iter().flatten().copied().collect();
                let mut f = Factor { vars, cards, values };
                for (v, level) in observed.iter().enumerate() {
                    if let Some(l) = level {
                        f = f.reduce(v, *l);
                    }
                }
                f
            })
            .collect();

        let mut hidden: Vec<usize> = (0..n).filter(|&v| v != q && observed[v].is_none()).collect();
        while !hidden.is_empty() {
            // greedy: eliminate the variable whose joined factor is smallest
            let (pick, _) = hidden
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let mut scope: Vec<(usize, usize)> = Vec::new();
                    for f in factors.iter().filter(|f| f.vars.contains(&v)) {
                        for (&u, &c) in f.vars.iter().zip(&f.cards) {
                            if !scope.iter().any(|&(w, _)| w == u) {
                                scope.push((u, c));
                            }
                        }
                    }
                    (k, scope.iter().map(|&(_, c)| c).product::<usize>())
                })
                .min_by_key(|&(k, w)| (w, hidden[k]))
                .unwrap();
            let v = hidden.swap_remove(pick);
            let (touching, rest): (Vec<Factor>, Vec<Factor>) =
                factors.into_iter().partition(|f| f.vars.contains(&v));
            factors = rest;
            if let Some(joined) = touching.into_iter().reduce(|a, b| a.product(&b)) {
                factors.push(joined.sum_out(v));
            }
        }

        let card = self.variables()[q].cardinality();
        let mut result = Factor { vars: vec![q], cards: vec![card], values: vec![1.0; card] };
        let mut scale = 1.0;
        for f in &factors {
            if f.vars.is_empty() {
                scale *= f.values[0];
            } else {
                debug_assert!(f.weight() == card);
                result = result.product(f);
            }
        }
        normalize(result.values.iter().map(|p| p * scale).collect())
    }

    /// `P(query | evidence)` by summing the joint over every completion.
    pub fn posterior_by_enumeration(&self, query: &str, evidence: &Assignment) -> Result<Vec<f64>> {
        let (q, observed) = self.check_query(query, evidence)?;
        let mut dist = vec![0.0; self.variables()[q].cardinality()];
        self.for_each_completion(&observed, |levels| {
            dist[levels[q]] += self.joint_dense(levels);
        });
        normalize(dist)
    }

    /// Visits every full dense assignment consistent with `observed`.
    pub fn for_each_completion<F: FnMut(&[usize])>(&self, observed: &[Option<usize>], mut f: F) {
        let free: Vec<usize> = (0..observed.len()).filter(|&i| observed[i].is_none()).collect();
        let cards: Vec<usize> = free.iter().map(|&i| self.variables()[i].cardinality()).collect();
        let mut levels: Vec<usize> = observed.iter().map(|o| o.unwrap_or(0)).collect();
        let total: usize = cards.iter().product();
        let mut idx = vec![0usize; free.len()];
        for _ in 0..total {
            for (k, &i) in free.iter().enumerate() {
                levels[i] = idx[k];
            }
            f(&levels);
            increment(&mut idx, &cards);
        }
    }
}
