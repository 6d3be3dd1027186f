//! Discrete Bayesian networks: representation, K2-smoothed fitting, exact
//! inference and ancestral sampling.

mod cpt;
mod inference;
mod network;
mod variable;

pub use cpt::{config_index, config_levels, fit_cpt_mle_k2, Cpt, FamilyCounts};
pub use network::{DiscreteBn, Structure};
pub use variable::{Assignment, VariableSpec};
