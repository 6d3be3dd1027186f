//! Hybrid Bayesian networks that combine discrete tabular variables with
//! continuous text-embedding evidence.
//!
//! Two ways of attaching text to a discrete network are provided:
//!
//! - [`gaussian`]: a generative text node, `P(T | parents)` modelled as one
//!   regularized multivariate Gaussian per parent configuration.
//! - [`classifier`]: discriminative text conditioning, `P(child | parents, T)`
//!   modelled as one neural classifier per parent configuration.
//!
//! Baselines ([`discrete`] networks and the [`ff`] feed-forward classifier),
//! a synthetic data factory ([`data`]) and the evaluation harness ([`eval`])
//! complete the crate.

pub mod classifier;
pub mod data;
pub mod discrete;
pub mod embedding;
pub mod eval;
pub mod error;

pub mod evidence;
pub mod ff;

pub mod gaussian;
pub mod math;
pub mod neural;
pub mod rng;

pub use embedding::Embedding;
pub use error::{Error, Result};
