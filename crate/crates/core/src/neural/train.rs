use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::net::{DenseNet, Gradients, Mode};
use crate::error::{Error, Result};
use crate::rng;

/// Mini-batch settings shared by the neural trainers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig { epochs: 200, batch_size: 256, adam: AdamConfig::default(), seed: 0 }
    }
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch size must be positive".into()));
        }
        if !(self.adam.learning_rate > 0.0) || self.adam.weight_decay < 0.0 {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Trains `net` on `(input, label)` pairs by mean binary cross-entropy.
/// Returns the mean training loss of every epoch.
pub fn train_bce(net: &mut DenseNet, inputs: &[Vec<f64>], labels: &[f64], cfg: &BatchConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    if inputs.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: inputs.len(), actual: labels.len() });
    }
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("no training examples".into()));
    }
    let mut shuffle = rng::stream(cfg.seed, "shuffle");
    let mut dropout = rng::stream(cfg.seed, "dropout");
    let mut adam = AdamState::for_net(cfg.adam, net);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = Gradients::zeros_like(net);
            let w = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let fw = net.forward(&inputs[i], Mode::Train, &mut dropout)?;
                batch_loss += net.accumulate_bce(&fw, labels[i], w, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged(format!("loss is {batch_loss} at epoch {epoch}, batch {b}")));
            }
            adam.step_net(net, &grads)
                .map_err(|e| Error::Diverged(format!("epoch {epoch}, batch {b}: {e}")))?;
            total += batch_loss * batch.len() as f64;
        }
        history.push(total / inputs.len() as f64);
    }
    Ok(history)
}
