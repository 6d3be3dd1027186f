use serde::{Deserialize, Serialize};

use super::net::{DenseNet, Gradients};
use crate::error::{Error, Result};

/// Adam hyperparameters. Weight decay is decoupled: each step also
/// subtracts `lr * weight_decay * param`, outside the moment estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-2,
            weight_decay: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64, weight_decay: f64) -> Self {
        AdamConfig { learning_rate, weight_decay, ..Default::default() }
    }
}

/// One named group of parameters and their gradient.
pub struct ParamGroup<'a> {
    pub name: String,
    pub values: &'a mut [f64],
    pub grad: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        AdamState {
            config,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_net(config: AdamConfig, net: &DenseNet) -> Self {
        let shapes: Vec<usize> = net
            .layers()
            .iter()
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect();
        Self::new(config, &shapes)
    }

    /// Applies one update to every group. Fails without touching any
    /// parameter if a gradient is not finite.
    pub fn step(&mut self, groups: &mut [ParamGroup<'_>]) -> Result<()> {
        if groups.len() != self.m.len() {
            return Err(Error::DimensionMismatch { expected: self.m.len(), actual: groups.len() });
        }
        for (g, m) in groups.iter().zip(&self.m) {
            if g.values.len() != m.len() || g.grad.len() != m.len() {
                return Err(Error::DimensionMismatch { expected: m.len(), actual: g.grad.len() });
            }
            if let Some(j) = g.grad.iter().position(|x| !x.is_finite()) {
                return Err(Error::Diverged(format!("non-finite gradient at {}[{j}]", g.name)));
            }
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for ((g, m), v) in groups.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            for (((p, &gr), mi), vi) in g.values.iter_mut().zip(g.grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = c.beta1 * *mi + (1.0 - c.beta1) * gr;
                *vi = c.beta2 * *vi + (1.0 - c.beta2) * gr * gr;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *p -= c.learning_rate * (m_hat / (v_hat.sqrt() + c.epsilon) + c.weight_decay * *p);
            }
        }
        Ok(())
    }

    /// Adam step on all of a network's parameters.
    pub fn step_net(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        let mut groups: Vec<ParamGroup<'_>> = Vec::new();
        for (l, (layer, (gw, gb))) in net.layers_mut().iter_mut().zip(&grads.layers).enumerate() {
            groups.push(ParamGroup { name: format!("layer{l}.weights"), values: &mut layer.weights, grad: gw });
            groups.push(ParamGroup { name: format!("layer{l}.bias"), values: &mut layer.bias, grad: gb });
        }
        self.step(&mut groups)
    }
}
