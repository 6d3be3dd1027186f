use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fixed-dimension text embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("embedding must not be empty".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("embedding".into()));
        }
        Ok(Embedding(values))
    }

    pub fn zeros(d: usize) -> Self {
        Embedding(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Embedding {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
