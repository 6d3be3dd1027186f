use super::bank::{GaussianBank, TextParents};
use super::params::CovarianceKind;
use crate::data::schema::{self, Diagnosis, COUGH, DYSP, INF, NASAL, PNEU};
use crate::data::Dataset;
use crate::discrete::DiscreteBn;
use crate::error::{Error, Result};
use crate::evidence::Evidence;
use crate::math::log_sum_exp;

/// Discrete network over the tabular variables with a generative text node
/// `P(T | parents)` attached.
#[derive(Debug, Clone, PartialEq)]
pub struct GenModel {
    bn: DiscreteBn,
    bank: GaussianBank,
    // variable indices in `bn`
    pneu: usize,
    inf: usize,
    symptoms: [usize; 3],
}

impl GenModel {
    pub fn new(bn: DiscreteBn, bank: GaussianBank) -> Result<Self> {
        let pneu = bn.var_index(PNEU)?;
        let inf = bn.var_index(INF)?;
        let symptoms = [bn.var_index(DYSP)?, bn.var_index(COUGH)?, bn.var_index(NASAL)?];
        Ok(GenModel { bn, bank, pneu, inf, symptoms })
    }

    /// CPTs by smoothed maximum likelihood on all records; the text node on
    /// records with text.
    pub fn fit(data: &Dataset, alpha: f64, mode: TextParents, kind: CovarianceKind) -> Result<Self> {
        let bn = schema::tabular_structure().fit(&data.assignments(false))?;
        let bank = GaussianBank::fit(data, alpha, mode, kind)?;
        Self::new(bn, bank)
    }

    pub fn bn(&self) -> &DiscreteBn {
        &self.bn
    }

    pub fn bank(&self) -> &GaussianBank {
        &self.bank
    }

    fn condition(&self, levels: &[usize]) -> usize {
        let s = self.symptoms.map(|i| levels[i]);
        self.bank.mode().condition(levels[self.pneu], levels[self.inf], s)
    }

    /// Posterior over the query diagnosis. Unobserved discrete variables are
    /// summed out in log space; without text the text node integrates to one
    /// and drops out.
    pub fn posterior(&self, evidence: &Evidence, query: Diagnosis) -> Result<Vec<f64>> {
        let q = self.bn.var_index(query.name())?;
        if evidence.tabular.contains(query.name()) {
            return Err(Error::QueryInEvidence(query.name().to_string()));
        }
        let observed = self.bn.partial(&evidence.tabular)?;
        let text = match &evidence.text {
            Some(t) => {
                if t.dim() != self.bank.dim() {
                    return Err(Error::DimensionMismatch { expected: self.bank.dim(), actual: t.dim() });
                }
                Some(t.as_slice())
            }
            None => None,
        };
        let mut densities: Vec<Option<f64>> = vec![None; self.bank.n_conditions()];
        let card = self.bn.variables()[q].cardinality();
        let mut terms: Vec<Vec<f64>> = vec![Vec::new(); card];
        let mut failure = None;
        self.bn.for_each_completion(&observed, |levels| {
            let mut lw = self.bn.log_joint_dense(levels);
            if let Some(x) = text {
                let c = self.condition(levels);
                let ld = match densities[c] {
                    Some(v) => v,
                    None => match self.bank.log_density(c, x) {
                        Ok(v) => *densities[c].insert(v),
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NEG_INFINITY
                        }
                    },
                };
                lw += ld;
            }
            terms[levels[q]].push(lw);
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let per_level: Vec<f64> = terms.iter().map(|t| log_sum_exp(t)).collect();
        let total = log_sum_exp(&per_level);
        if !total.is_finite() {
            return Err(Error::ZeroEvidence);
        }
        Ok(per_level.iter().map(|l| (l - total).exp()).collect())
    }
}
