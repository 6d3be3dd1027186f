//! Generative text node: regularized multivariate Gaussians over text
//! embeddings, one per configuration of the node's discrete parents.

mod bank;
mod model;
mod params;

pub use bank::{GaussianBank, TextParents, MIN_CONDITION_SAMPLES};
pub use model::GenModel;
pub use params::{Covariance, CovarianceKind, GaussianParams};
